mod common;

use common::{max_abs_diff, random_spd, random_stats};
use gaussot::linalg::{self, random_orthogonal};
use gaussot::stats::{content_loss, estimate_stats, expected_content_cost, sample_gaussian};
use gaussot::transforms::{
    adain_map, apply_transform, ost_map, rotated_wct_map, wct_map, whiten_map,
};
use gaussot::{GaussianStats, WhiteningMethod};
use ndarray::Array1;
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![
        Just(2usize),
        3usize..9,
        Just(16usize),
        Just(32usize),
        Just(64usize)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn covariance_matching(dim in dims(), log_cond in 0.0f64..6.0, seed in any::<u64>()) {
        let cond = 10f64.powf(log_cond);
        let c = random_stats(dim, cond, seed);
        let s = random_stats(dim, cond, seed.wrapping_add(1));
        let q = random_orthogonal(dim, seed.wrapping_add(2));
        for t in [
            ost_map(&c, &s, 0.0).unwrap(),
            wct_map(&c, &s, 0.0).unwrap(),
            rotated_wct_map(&c, &s, &q, 0.0).unwrap(),
        ] {
            let r = t.covariance_residual(&c.cov, &s.cov);
            prop_assert!(r <= 1e-6, "residual {r:e}");
        }
    }

    #[test]
    fn ost_is_symmetric_psd_and_optimal(dim in 2usize..12, log_cond in 0.0f64..4.0, seed in any::<u64>()) {
        let cond = 10f64.powf(log_cond);
        let c = random_stats(dim, cond, seed);
        let s = random_stats(dim, cond, seed.wrapping_add(7));
        let ost = ost_map(&c, &s, 0.0).unwrap();
        prop_assert_eq!(&ost.matrix, &ost.matrix.t().to_owned());
        let eig = linalg::sym_eigen(&linalg::SymMatrix::new(ost.matrix.clone()).unwrap()).unwrap();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));

        let best = expected_content_cost(&ost, &c, &s).unwrap();
        let slack = 1e-9 * c.cov.trace();
        prop_assert!(best <= expected_content_cost(&wct_map(&c, &s, 0.0).unwrap(), &c, &s).unwrap() + slack);
        for k in 0..25u64 {
            let q = random_orthogonal(dim, seed ^ k);
            let r = rotated_wct_map(&c, &s, &q, 0.0).unwrap();
            prop_assert!(best <= expected_content_cost(&r, &c, &s).unwrap() + slack);
        }
    }

    #[test]
    fn ost_between_equal_stats_is_identity(dim in dims(), log_cond in 0.0f64..6.0, seed in any::<u64>()) {
        let c = random_stats(dim, 10f64.powf(log_cond), seed);
        let t = ost_map(&c, &c, 0.0).unwrap();
        let eye = ndarray::Array2::<f64>::eye(dim);
        prop_assert!(max_abs_diff(&t.matrix, &eye) <= 1e-9);
    }

    #[test]
    fn adain_matches_diagonal(dim in 1usize..16, seed in any::<u64>()) {
        let c = random_stats(dim, 100.0, seed);
        let s = random_stats(dim, 100.0, seed.wrapping_add(3));
        let t = adain_map(&c, &s).unwrap();
        let implied = t.implied_covariance(&c.cov);
        let diag_err = implied.as_array().diag().iter()
            .zip(s.cov.as_array().diag().iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(diag_err <= 1e-10);
    }

    #[test]
    fn zca_displaces_least(dim in 2usize..10, log_cond in 0.0f64..4.0, seed in any::<u64>()) {
        let c = random_stats(dim, 10f64.powf(log_cond), seed);
        let white = GaussianStats::new(Array1::zeros(dim), linalg::SymMatrix::identity(dim), 0).unwrap();
        let cost = |m| expected_content_cost(&whiten_map(&c, m, 0.0).unwrap(), &c, &white).unwrap();
        let zca = cost(WhiteningMethod::Zca);
        let tol = 1e-9 * (c.cov.trace() + dim as f64);
        prop_assert!(zca <= cost(WhiteningMethod::Pca) + tol);
        prop_assert!(zca <= cost(WhiteningMethod::Cholesky) + tol);
    }

    #[test]
    fn alpha_one_matches_means(dim in 1usize..8, seed in any::<u64>()) {
        let src = random_stats(dim, 10.0, seed);
        let f = sample_gaussian(&src, 200, seed).unwrap();
        let c = estimate_stats(&f);
        let s = random_stats(dim, 10.0, seed.wrapping_add(11));
        let out = apply_transform(&f, &ost_map(&c, &s, 0.0).unwrap(), 1.0).unwrap();
        let m = estimate_stats(&out).mean;
        for (a, b) in m.iter().zip(s.mean.iter()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}

#[test]
fn sample_statistics_converge() {
    let n = 20_000;
    for seed in 0..40u64 {
        let g = random_stats(1 + (seed % 5) as usize, 50.0, seed);
        let est = estimate_stats(&sample_gaussian(&g, n, seed).unwrap());
        let tol = 5.0 * g.cov.trace() / (n as f64).sqrt();
        let err = max_abs_diff(est.cov.as_array(), g.cov.as_array());
        assert!(err <= tol, "seed {seed}: cov error {err} > {tol}");
    }
}

#[test]
fn closed_form_cost_matches_sampling() {
    for seed in 0..3u64 {
        let c = random_stats(3, 20.0, 100 + seed);
        let s = random_stats(3, 20.0, 200 + seed);
        for t in [ost_map(&c, &s, 0.0).unwrap(), adain_map(&c, &s).unwrap()] {
            let closed = expected_content_cost(&t, &c, &s).unwrap();
            let u = sample_gaussian(&c, 200_000, seed).unwrap();
            let mc = content_loss(&u, &apply_transform(&u, &t, 1.0).unwrap()).unwrap();
            assert!(
                (mc - closed).abs() <= 0.02 * closed,
                "mc {mc} closed {closed}"
            );
        }
    }
}

#[test]
fn spd_fixture_has_requested_condition() {
    let a = random_spd(10, 1e6, 2.0, 1);
    let eig = linalg::sym_eigen(&a).unwrap();
    let cond = eig.eigenvalues[0] / eig.eigenvalues[9];
    assert!((cond / 1e6 - 1.0).abs() < 1e-6);
}
