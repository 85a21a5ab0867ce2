//! Dense symmetric linear algebra.
//!
//! Everything here is self-contained and deterministic: eigendecompositions use
//! a cyclic Jacobi sweep with a fixed pivot order, so identical input bytes give
//! identical output bytes on every run.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::rng;

/// Default relative ridge for inverse matrix powers.
pub const DEFAULT_RIDGE: f64 = 1e-5;

const MAX_SWEEPS: usize = 100;

/// Symmetric `C x C` matrix. Construction symmetrizes as `(A + Aᵀ) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Array2<f64>);

impl SymMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (rows, cols) = a.dim();
        if rows != cols {
            return Err(Error::Shape(format!(
                "symmetric matrix must be square, got {rows}x{cols}"
            )));
        }
        if rows == 0 {
            return Err(Error::Shape("symmetric matrix must have dim >= 1".into()));
        }
        Ok(SymMatrix(symmetrize(a)))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(Array2::eye(dim))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        SymMatrix(Array2::from_diag(&Array1::from(diag.to_vec())))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diag().sum()
    }

    pub fn mean_diag(&self) -> f64 {
        self.trace() / self.dim() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Eigenvalues sorted descending with matching orthonormal eigenvector columns.
///
/// Each eigenvector is sign-normalized so that its largest-magnitude entry
/// (first one on ties) is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
}

impl EigenDecomposition {
    /// `V · diag(f(λ)) · Vᵀ`, symmetrized.
    pub fn compose(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let scaled = &self.eigenvectors * &self.eigenvalues.mapv(f);
        SymMatrix(symmetrize(scaled.dot(&self.eigenvectors.t())))
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.compose(|l| l)
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = a.dim();
    let mut m = a.0.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale = frobenius(&m.view());

    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if off == 0.0 || off.sqrt() <= f64::EPSILON * 1e-2 * scale {
            break;
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                // Negligible against both diagonal entries: drop it outright.
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[[p, q]] = 0.0;
                    m[[q, p]] = 0.0;
                    continue;
                }

                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = m[[k, p]];
                    let akq = m[[k, q]];
                    m[[k, p]] = c * akp - s * akq;
                    m[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[[p, k]];
                    let aqk = m[[q, k]];
                    m[[p, k]] = c * apk - s * aqk;
                    m[[q, k]] = s * apk + c * aqk;
                }
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;

                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]));

    let eigenvalues = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut eigenvectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let col = v.column(src);
        let mut pivot = 0;
        for k in 1..n {
            if col[k].abs() > col[pivot].abs() {
                pivot = k;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.column_mut(dst).assign(&col.mapv(|x| sign * x));
    }

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Matrix powers supported by [`spd_pow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Power {
    Sqrt,
    InvSqrt,
}

/// `V · diag((λ + ridge·mean(diag a))^p) · Vᵀ` for `p = ±1/2`.
///
/// Shifted eigenvalues are clamped at zero for the square root. The inverse
/// square root fails with [`Error::SingularMatrix`] if any shifted eigenvalue
/// is not strictly positive.
pub fn spd_pow(a: &SymMatrix, power: Power, ridge: f64) -> Result<SymMatrix> {
    let eig = sym_eigen(a)?;
    spd_pow_from(&eig, a.mean_diag(), power, ridge)
}

pub(crate) fn spd_pow_from(
    eig: &EigenDecomposition,
    mean_diag: f64,
    power: Power,
    ridge: f64,
) -> Result<SymMatrix> {
    match power {
        Power::Sqrt => {
            let shift = checked_shift(mean_diag, ridge)?;
            Ok(eig.compose(|l| (l + shift).max(0.0).sqrt()))
        }
        Power::InvSqrt => {
            positive_shifted(eig, mean_diag, ridge)?;
            let shift = ridge_shift(mean_diag, ridge);
            Ok(eig.compose(|l| 1.0 / (l + shift).sqrt()))
        }
    }
}

fn checked_shift(mean_diag: f64, ridge: f64) -> Result<f64> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "ridge must be >= 0, got {ridge}"
        )));
    }
    Ok(ridge_shift(mean_diag, ridge))
}

/// Ridge-shifted eigenvalues, all strictly positive or
/// [`Error::SingularMatrix`].
pub(crate) fn positive_shifted(
    eig: &EigenDecomposition,
    mean_diag: f64,
    ridge: f64,
) -> Result<Array1<f64>> {
    let shift = checked_shift(mean_diag, ridge)?;
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l + shift <= 0.0) {
        return Err(Error::SingularMatrix(format!(
            "eigenvalue {bad:e} (shift {shift:e}) is not positive"
        )));
    }
    Ok(eig.eigenvalues.mapv(|l| l + shift))
}

/// Absolute diagonal shift for a relative `ridge`: `ridge · mean(diag a)`,
/// or `ridge` itself when the diagonal averages to zero (an all-zero PSD
/// matrix would otherwise get no shift at all).
pub fn ridge_shift(mean_diag: f64, ridge: f64) -> f64 {
    if mean_diag > 0.0 {
        ridge * mean_diag
    } else {
        ridge
    }
}

/// Orthogonal `C x C` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix(Array2<f64>);

impl OrthogonalMatrix {
    pub fn identity(dim: usize) -> Self {
        OrthogonalMatrix(Array2::eye(dim))
    }

    /// Wraps `q` after checking `‖QᵀQ − I‖_max ≤ 1e-10`.
    pub fn new(q: Array2<f64>) -> Result<Self> {
        let (rows, cols) = q.dim();
        if rows != cols || rows == 0 {
            return Err(Error::Shape(format!(
                "orthogonal matrix must be square and non-empty, got {rows}x{cols}"
            )));
        }
        let err = orthogonality_error(&q.view());
        if err.is_nan() || err > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "matrix is not orthogonal (|QᵀQ - I|_max = {err:e})"
            )));
        }
        Ok(OrthogonalMatrix(q))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }
}

/// Haar-distributed orthogonal matrix from a seeded Gaussian matrix.
///
/// The Gaussian matrix is factored `G = QR` with a positive diagonal on `R`
/// (modified Gram-Schmidt, applied twice per column). The `1 x 1` case is
/// fixed to `[[1.0]]`.
pub fn random_orthogonal(dim: usize, seed: u64) -> OrthogonalMatrix {
    assert!(dim >= 1, "orthogonal matrix dimension must be >= 1");
    if dim == 1 {
        return OrthogonalMatrix::identity(1);
    }
    let mut rng = rng::seeded(seed);
    let mut q = rng::standard_normal(&mut rng, dim, dim);
    for j in 0..dim {
        for _pass in 0..2 {
            for k in 0..j {
                let r = q.column(k).dot(&q.column(j));
                let qk = q.column(k).to_owned();
                q.column_mut(j).scaled_add(-r, &qk);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|x| x / norm);
    }
    OrthogonalMatrix(q)
}

/// Lower Cholesky factor `L` with `A = LLᵀ`.
pub fn cholesky_lower(a: &SymMatrix) -> Result<Array2<f64>> {
    let n = a.dim();
    let a = a.as_array();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d.is_nan() || d <= 0.0 {
            return Err(Error::SingularMatrix(format!(
                "Cholesky pivot {j} is {d:e}; matrix is not positive definite"
            )));
        }
        let ljj = d.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

/// Inverse of a nonsingular lower-triangular matrix by forward substitution.
pub fn lower_triangular_inverse(l: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut inv = Array2::<f64>::zeros((n, n));
    for col in 0..n {
        inv[[col, col]] = 1.0 / l[[col, col]];
        for i in (col + 1)..n {
            let mut s = 0.0;
            for k in col..i {
                s += l[[i, k]] * inv[[k, col]];
            }
            inv[[i, col]] = -s / l[[i, i]];
        }
    }
    inv
}

pub fn symmetrize(a: Array2<f64>) -> Array2<f64> {
    let t = a.t().to_owned();
    (a + t) * 0.5
}

pub fn frobenius(a: &ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs(a: &ArrayView2<'_, f64>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖QᵀQ − I‖_max`.
pub fn orthogonality_error(q: &ArrayView2<'_, f64>) -> f64 {
    let gram = q.t().dot(q);
    let mut err: f64 = 0.0;
    for ((i, j), g) in gram.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        err = err.max((g - target).abs());
    }
    err
}
