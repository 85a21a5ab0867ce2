//! Gaussian statistics of feature maps, Gatys-style losses and the
//! closed-form expected transport cost.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};
use crate::rng;
use crate::transforms::AffineTransform;

/// `C x N` activations: one column per spatial position.
///
/// Maps read from `(C, H, W)` tensors remember their spatial grid so that
/// label masks can be aligned to them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    data: Array2<f64>,
    spatial: Option<(usize, usize)>,
}

impl FeatureMap {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (c, n) = data.dim();
        if c == 0 || n == 0 {
            return Err(Error::Shape(format!(
                "feature map needs C >= 1 and N >= 1, got {c}x{n}"
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(
                "feature map contains non-finite values".into(),
            ));
        }
        // Standard layout keeps matrix products bit-reproducible regardless
        // of how the caller assembled the array.
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(FeatureMap {
            data,
            spatial: None,
        })
    }

    /// Feature map laid out on an `height x width` grid (row-major positions).
    pub fn with_spatial(data: Array2<f64>, height: usize, width: usize) -> Result<Self> {
        if height * width != data.ncols() {
            return Err(Error::Shape(format!(
                "grid {height}x{width} does not cover {} positions",
                data.ncols()
            )));
        }
        let mut f = FeatureMap::new(data)?;
        f.spatial = Some((height, width));
        Ok(f)
    }

    pub fn channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn positions(&self) -> usize {
        self.data.ncols()
    }

    pub fn spatial(&self) -> Option<(usize, usize)> {
        self.spatial
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    /// Same grid metadata, new values. Used by transforms that preserve shape.
    pub(crate) fn replace_data(&self, data: Array2<f64>) -> Result<Self> {
        debug_assert_eq!(data.dim(), self.data.dim());
        let mut f = FeatureMap::new(data)?;
        f.spatial = self.spatial;
        Ok(f)
    }
}

/// Mean vector and covariance of a feature map viewed as a Gaussian sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: Array1<f64>,
    pub cov: SymMatrix,
    pub sample_count: usize,
}

impl GaussianStats {
    pub fn new(mean: Array1<f64>, cov: SymMatrix, sample_count: usize) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::Shape(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                cov.dim(),
                cov.dim()
            )));
        }
        Ok(GaussianStats {
            mean,
            cov,
            sample_count,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Content loss plus named per-layer style losses.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub content_loss: f64,
    pub style_losses: Vec<(String, f64)>,
}

impl LossReport {
    pub fn new(content_loss: f64, style_losses: Vec<(String, f64)>) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(content_loss) || !style_losses.iter().all(|(_, v)| ok(*v)) {
            return Err(Error::InvalidInput(
                "losses must be finite and non-negative".into(),
            ));
        }
        Ok(LossReport {
            content_loss,
            style_losses,
        })
    }
}

/// Row means and population covariance (divisor `N`).
pub fn estimate_stats(f: &FeatureMap) -> GaussianStats {
    let n = f.positions();
    let mean = f
        .data
        .mean_axis(Axis(1))
        .expect("feature map has at least one position");
    let centered = &f.data - &mean.view().insert_axis(Axis(1));
    let cov = centered.dot(&centered.t()) / n as f64;
    GaussianStats {
        mean,
        cov: SymMatrix::new(cov).expect("covariance is square"),
        sample_count: n,
    }
}

/// `‖transformed − original‖_F² / N`.
pub fn content_loss(original: &FeatureMap, transformed: &FeatureMap) -> Result<f64> {
    if original.data.dim() != transformed.data.dim() {
        return Err(Error::Shape(format!(
            "content loss needs equal shapes, got {:?} and {:?}",
            original.data.dim(),
            transformed.data.dim()
        )));
    }
    let sq: f64 = original
        .data
        .iter()
        .zip(transformed.data.iter())
        .map(|(a, b)| (b - a) * (b - a))
        .sum();
    Ok(sq / original.positions() as f64)
}

/// `data · dataᵀ / (C·N)`, no mean subtraction.
pub fn gram_matrix(f: &FeatureMap) -> SymMatrix {
    let norm = (f.channels() * f.positions()) as f64;
    SymMatrix::new(f.data.dot(&f.data.t()) / norm).expect("gram matrix is square")
}

/// Squared Frobenius distance between Gram matrices.
pub fn style_loss(f1: &FeatureMap, f2: &FeatureMap) -> Result<f64> {
    if f1.channels() != f2.channels() {
        return Err(Error::Shape(format!(
            "style loss needs equal channel counts, got {} and {}",
            f1.channels(),
            f2.channels()
        )));
    }
    let diff = gram_matrix(f1).into_array() - gram_matrix(f2).into_array();
    Ok(diff.iter().map(|x| x * x).sum())
}

/// `E‖t(u) − u‖²` for `u ~ N(μc, Σc)`, in closed form:
///
/// ```text
/// tr(Σc) + tr(T Σc Tᵀ) − 2 tr(T Σc) + ‖μs − μc‖²
/// ```
///
/// The transform is assumed to center on `c.mean` and recenter on `s.mean`,
/// which holds for every map built from the same pair of statistics.
pub fn expected_content_cost(
    t: &AffineTransform,
    c: &GaussianStats,
    s: &GaussianStats,
) -> Result<f64> {
    let dim = c.dim();
    if s.dim() != dim || t.dim() != dim {
        return Err(Error::Shape(format!(
            "dimension mismatch: transform {}, content {}, style {}",
            t.dim(),
            dim,
            s.dim()
        )));
    }
    let tm = &t.matrix;
    let t_sigma = tm.dot(c.cov.as_array());
    let implied_trace: f64 = (0..dim).map(|i| t_sigma.row(i).dot(&tm.row(i))).sum();
    let cross_trace = t_sigma.diag().sum();
    let delta = &s.mean - &c.mean;
    let cost = c.cov.trace() + implied_trace - 2.0 * cross_trace + delta.dot(&delta);
    // Exact zero can come out slightly negative after cancellation.
    Ok(cost.max(0.0))
}

/// `count` columns `μ + Σ^{1/2} z` with `z ~ N(0, I)` from the seeded stream.
pub fn sample_gaussian(stats: &GaussianStats, count: usize, seed: u64) -> Result<FeatureMap> {
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be >= 1".into()));
    }
    let eig = linalg::sym_eigen(&stats.cov)?;
    let top = eig.eigenvalues[0].max(1.0);
    let min = eig.eigenvalues[eig.eigenvalues.len() - 1];
    if min < -1e-10 * top {
        return Err(Error::InvalidInput(format!(
            "covariance is not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    let root = eig.compose(|l| l.max(0.0).sqrt());
    let mut rng = rng::seeded(seed);
    let z = rng::standard_normal(&mut rng, stats.dim(), count);
    let samples = root.as_array().dot(&z) + stats.mean.view().insert_axis(Axis(1));
    FeatureMap::new(samples)
}
