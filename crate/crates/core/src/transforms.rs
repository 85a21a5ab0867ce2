//! Linear feature transforms between Gaussian feature statistics.
//!
//! Every transform here has the affine form `t(u) = T (u − μc) + μs`. The
//! families differ only in how `T` is chosen:
//!
//! | kind          | `T`                                              | matches `TΣcTᵀ = Σs` |
//! |---------------|--------------------------------------------------|----------------------|
//! | OST           | `Σc^{-1/2} (Σc^{1/2} Σs Σc^{1/2})^{1/2} Σc^{-1/2}` | yes                  |
//! | WCT           | `Σs^{1/2} Σc^{-1/2}`                             | yes                  |
//! | rotated WCT   | `Σs^{1/2} Q Σc^{-1/2}`, `Q` orthogonal           | yes                  |
//! | AdaIN         | `diag(√(Σs,ii / Σc,ii))`                         | diagonal only        |
//! | whitening     | `W` with `W Σc Wᵀ = I`                           | against `I`          |
//!
//! Among all maps that match covariances, OST minimizes the expected squared
//! displacement `E‖t(u) − u‖²`; it is the symmetric positive semidefinite one.
//!
//! Inverse powers of `Σc` are regularized by a relative ridge: `Σc` is
//! replaced by `Σc + ridge·mean(diag Σc)·I` before any power is taken (see
//! [`linalg::ridge_shift`]), so the covariance-matching property holds
//! exactly for the shifted matrix.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{self, OrthogonalMatrix, Power, SymMatrix};
use crate::stats::{estimate_stats, FeatureMap, GaussianStats};

/// Floor on content variances for AdaIN.
const ADAIN_VARIANCE_FLOOR: f64 = 1e-12;

/// Smallest region, in positions, that gets its own transform in
/// [`semantic_transform`]. Smaller regions pass through unchanged.
pub const MIN_REGION_SIZE: usize = 2;

/// `t(u) = T (u − mu_c) + mu_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTransform {
    pub matrix: Array2<f64>,
    pub mu_c: Array1<f64>,
    pub mu_s: Array1<f64>,
}

impl AffineTransform {
    pub fn new(matrix: Array2<f64>, mu_c: Array1<f64>, mu_s: Array1<f64>) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if rows != cols || rows != mu_c.len() || rows != mu_s.len() {
            return Err(Error::Shape(format!(
                "transform matrix {rows}x{cols} with means of length {} and {}",
                mu_c.len(),
                mu_s.len()
            )));
        }
        let finite = matrix
            .iter()
            .chain(mu_c.iter())
            .chain(mu_s.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput(
                "transform has non-finite entries".into(),
            ));
        }
        Ok(AffineTransform { matrix, mu_c, mu_s })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Covariance of `t(u)` when `u` has covariance `cov`: `T·cov·Tᵀ`.
    pub fn implied_covariance(&self, cov: &SymMatrix) -> SymMatrix {
        let m = self.matrix.dot(cov.as_array()).dot(&self.matrix.t());
        SymMatrix::new(m).expect("square by construction")
    }

    /// `‖T Σc Tᵀ − Σs‖_F / ‖Σs‖_F` (absolute when `Σs` is zero).
    pub fn covariance_residual(&self, cov_c: &SymMatrix, cov_s: &SymMatrix) -> f64 {
        let implied = self.implied_covariance(cov_c).into_array();
        let diff = implied - cov_s.as_array();
        let num = linalg::frobenius(&diff.view());
        let den = linalg::frobenius(&cov_s.view());
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WhiteningMethod {
    Zca,
    Pca,
    Cholesky,
}

impl WhiteningMethod {
    pub const ALL: [WhiteningMethod; 3] = [
        WhiteningMethod::Zca,
        WhiteningMethod::Pca,
        WhiteningMethod::Cholesky,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WhiteningMethod::Zca => "zca",
            WhiteningMethod::Pca => "pca",
            WhiteningMethod::Cholesky => "cholesky",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Ost,
    Wct,
    AdaIn,
    RotatedWct { seed: u64 },
    WhitenOnly(WhiteningMethod),
}

impl TransformKind {
    /// Whether maps of this kind satisfy `TΣcTᵀ = Σs`.
    pub fn matches_covariance(self) -> bool {
        matches!(
            self,
            TransformKind::Ost | TransformKind::Wct | TransformKind::RotatedWct { .. }
        )
    }
}

fn check_dims(c: &GaussianStats, s: &GaussianStats) -> Result<()> {
    if c.dim() != s.dim() {
        return Err(Error::Shape(format!(
            "content has {} channels, style has {}",
            c.dim(),
            s.dim()
        )));
    }
    Ok(())
}

/// The optimal-transport map between two Gaussians.
///
/// Evaluated in the eigenbasis `Σc = U Λ Uᵀ`: with `B = Λ^{1/2} Uᵀ Σs U Λ^{1/2}`,
/// `T = U Λ^{-1/2} B^{1/2} Λ^{-1/2} Uᵀ`. Accuracy degrades with `cond(Σc)`
/// instead of its square.
pub fn ost_map(c: &GaussianStats, s: &GaussianStats, ridge: f64) -> Result<AffineTransform> {
    check_dims(c, s)?;
    let eig = linalg::sym_eigen(&c.cov)?;
    let root = linalg::positive_shifted(&eig, c.cov.mean_diag(), ridge)?.mapv(f64::sqrt);
    let u = &eig.eigenvectors;
    let b = u.t().dot(s.cov.as_array()).dot(u);
    let n = c.dim();
    let inner = SymMatrix::new(Array2::from_shape_fn((n, n), |(i, j)| {
        root[i] * b[[i, j]] * root[j]
    }))?;
    let inner_root = linalg::spd_pow(&inner, Power::Sqrt, 0.0)?;
    let core = Array2::from_shape_fn((n, n), |(i, j)| {
        inner_root.as_array()[[i, j]] / (root[i] * root[j])
    });
    let t = linalg::symmetrize(u.dot(&core).dot(&u.t()));
    AffineTransform::new(t, c.mean.clone(), s.mean.clone())
}

/// Whitening by `Σc^{-1/2}` followed by coloring with `Σs^{1/2}`.
pub fn wct_map(c: &GaussianStats, s: &GaussianStats, ridge: f64) -> Result<AffineTransform> {
    rotated_wct_map(c, s, &OrthogonalMatrix::identity(c.dim()), ridge)
}

/// Per-channel standard-deviation ratio; ignores channel correlations.
pub fn adain_map(c: &GaussianStats, s: &GaussianStats) -> Result<AffineTransform> {
    check_dims(c, s)?;
    let dc = c.cov.as_array().diag();
    let ds = s.cov.as_array().diag();
    let ratio = Array1::from_iter(
        dc.iter()
            .zip(ds.iter())
            .map(|(&vc, &vs)| (vs.max(0.0) / vc.max(ADAIN_VARIANCE_FLOOR)).sqrt()),
    );
    AffineTransform::new(Array2::from_diag(&ratio), c.mean.clone(), s.mean.clone())
}

/// `Σs^{1/2} Q Σc^{-1/2}`.
pub fn rotated_wct_map(
    c: &GaussianStats,
    s: &GaussianStats,
    q: &OrthogonalMatrix,
    ridge: f64,
) -> Result<AffineTransform> {
    check_dims(c, s)?;
    if q.dim() != c.dim() {
        return Err(Error::Shape(format!(
            "rotation is {}x{}, statistics have {} channels",
            q.dim(),
            q.dim(),
            c.dim()
        )));
    }
    let inv = linalg::spd_pow(&c.cov, Power::InvSqrt, ridge)?;
    let color = linalg::spd_pow(&s.cov, Power::Sqrt, 0.0)?;
    let t = color.as_array().dot(q.as_array()).dot(inv.as_array());
    AffineTransform::new(t, c.mean.clone(), s.mean.clone())
}

/// Whitening matrix `W` with `W Σc Wᵀ = I`; the recentering mean is zero.
pub fn whiten_map(
    c: &GaussianStats,
    method: WhiteningMethod,
    ridge: f64,
) -> Result<AffineTransform> {
    let dim = c.dim();
    let w = match method {
        WhiteningMethod::Zca => linalg::spd_pow(&c.cov, Power::InvSqrt, ridge)?.into_array(),
        WhiteningMethod::Pca => {
            let eig = linalg::sym_eigen(&c.cov)?;
            let scale =
                linalg::positive_shifted(&eig, c.cov.mean_diag(), ridge)?.mapv(|l| 1.0 / l.sqrt());
            eig.eigenvectors.t().to_owned() * &scale.insert_axis(Axis(1))
        }
        WhiteningMethod::Cholesky => {
            let shift = linalg::ridge_shift(c.cov.mean_diag(), ridge);
            let shifted = SymMatrix::new(c.cov.as_array() + &(Array2::<f64>::eye(dim) * shift))?;
            linalg::lower_triangular_inverse(&linalg::cholesky_lower(&shifted)?)
        }
    };
    AffineTransform::new(w, c.mean.clone(), Array1::zeros(dim))
}

/// Builds the `kind` transform from content and style statistics.
///
/// Whitening kinds ignore the style statistics.
pub fn build_transform(
    kind: TransformKind,
    c: &GaussianStats,
    s: &GaussianStats,
    ridge: f64,
) -> Result<AffineTransform> {
    match kind {
        TransformKind::Ost => ost_map(c, s, ridge),
        TransformKind::Wct => wct_map(c, s, ridge),
        TransformKind::AdaIn => adain_map(c, s),
        TransformKind::RotatedWct { seed } => {
            check_dims(c, s)?;
            let q = linalg::random_orthogonal(c.dim(), seed);
            rotated_wct_map(c, s, &q, ridge)
        }
        TransformKind::WhitenOnly(method) => whiten_map(c, method, ridge),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Per column: `α·(T(u − μc) + μs) + (1 − α)·u`.
///
/// `α = 0` returns the input unchanged and `α = 1` returns the pure transform.
pub fn apply_transform(f: &FeatureMap, t: &AffineTransform, alpha: f64) -> Result<FeatureMap> {
    check_alpha(alpha)?;
    if t.dim() != f.channels() {
        return Err(Error::Shape(format!(
            "transform is {}-dimensional, feature map has {} channels",
            t.dim(),
            f.channels()
        )));
    }
    if alpha == 0.0 {
        return Ok(f.clone());
    }
    let centered = f.data() - &t.mu_c.view().insert_axis(Axis(1));
    let mut out = t.matrix.dot(&centered) + t.mu_s.view().insert_axis(Axis(1));
    if alpha < 1.0 {
        out *= alpha;
        out.scaled_add(1.0 - alpha, f.data());
    }
    f.replace_data(out)
}

/// One integer label per feature position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    labels: Vec<i64>,
}

impl RegionMask {
    pub fn new(labels: Vec<i64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Shape("region mask is empty".into()));
        }
        Ok(RegionMask { labels })
    }

    pub fn uniform(len: usize, label: i64) -> Result<Self> {
        RegionMask::new(vec![label; len])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Distinct labels in ascending order.
    pub fn label_set(&self) -> BTreeSet<i64> {
        self.labels.iter().copied().collect()
    }

    fn positions_of(&self, label: i64) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == label).then_some(i))
            .collect()
    }
}

/// Region-by-region transfer: each content region is mapped with statistics
/// fitted on itself and on the same-labelled style region.
///
/// Regions with fewer than [`MIN_REGION_SIZE`] positions on either side are
/// copied unchanged.
pub fn semantic_transform(
    fc: &FeatureMap,
    fs: &FeatureMap,
    mask_c: &RegionMask,
    mask_s: &RegionMask,
    kind: TransformKind,
    alpha: f64,
    ridge: f64,
) -> Result<FeatureMap> {
    check_alpha(alpha)?;
    if fc.channels() != fs.channels() {
        return Err(Error::Shape(format!(
            "content has {} channels, style has {}",
            fc.channels(),
            fs.channels()
        )));
    }
    if mask_c.len() != fc.positions() || mask_s.len() != fs.positions() {
        return Err(Error::Shape(format!(
            "masks cover {} and {} positions, features have {} and {}",
            mask_c.len(),
            mask_s.len(),
            fc.positions(),
            fs.positions()
        )));
    }
    let style_labels = mask_s.label_set();
    let content_labels = mask_c.label_set();
    if let Some(&missing) = content_labels.iter().find(|l| !style_labels.contains(l)) {
        return Err(Error::MissingStyleRegion(missing));
    }

    let mut out = fc.data().clone();
    for label in content_labels {
        let idx_c = mask_c.positions_of(label);
        let idx_s = mask_s.positions_of(label);
        if idx_c.len() < MIN_REGION_SIZE || idx_s.len() < MIN_REGION_SIZE {
            continue;
        }
        let region_c = FeatureMap::new(fc.data().select(Axis(1), &idx_c))?;
        let region_s = FeatureMap::new(fs.data().select(Axis(1), &idx_s))?;
        let t = build_transform(
            kind,
            &estimate_stats(&region_c),
            &estimate_stats(&region_s),
            ridge,
        )?;
        let mapped = apply_transform(&region_c, &t, alpha)?;
        for (k, &col) in idx_c.iter().enumerate() {
            out.column_mut(col).assign(&mapped.data().column(k));
        }
    }
    fc.replace_data(out)
}
