#![allow(dead_code)]

use gaussot::linalg::{random_orthogonal, SymMatrix};
use gaussot::rng;
use gaussot::GaussianStats;
use ndarray::{Array1, Array2};

/// `Q diag(λ) Qᵀ` with eigenvalues spread log-uniformly over
/// `[scale / cond, scale]`, endpoints included.
pub fn random_spd(dim: usize, cond: f64, scale: f64, seed: u64) -> SymMatrix {
    let q = random_orthogonal(dim, seed);
    let lambdas = Array1::from_iter((0..dim).map(|i| {
        let frac = if dim == 1 {
            0.0
        } else {
            i as f64 / (dim - 1) as f64
        };
        scale * cond.powf(-frac)
    }));
    let q = q.as_array();
    SymMatrix::new((q * &lambdas).dot(&q.t())).unwrap()
}

pub fn random_stats(dim: usize, cond: f64, seed: u64) -> GaussianStats {
    let mut r = rng::seeded(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mean = rng::standard_normal(&mut r, dim, 1).column(0).to_owned();
    let scale = 0.5 + (seed % 7) as f64;
    GaussianStats::new(mean, random_spd(dim, cond, scale, seed), 0).unwrap()
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
