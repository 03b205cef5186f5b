//! Affine-invariant geometry on symmetric positive-definite matrices.
//!
//! Covariance estimation with shrinkage, the Riemannian distance
//! `‖log(A^{-1/2} B A^{-1/2})‖_F`, the Fréchet (Karcher) mean, the
//! minimum-distance-to-mean classifier and backward-elimination channel
//! selection built on them.

mod mdm;
mod mean;
mod selection;

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{Cholesky, DMatrix, Dyn};
use thiserror::Error;

use crate::scalar::Real;

pub use mdm::{mdm_fit, mdm_predict, MdmDocument, MdmModel, MDM_DOCUMENT_VERSION};
pub use mean::{frechet_mean, frechet_residual, FrechetOptions};
pub use selection::{backward_elimination, CentroidPolicy, Removal, SelectionOptions, SelectionTrace};

/// Default covariance shrinkage toward the scaled identity.
pub const DEFAULT_SHRINKAGE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpdError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("shrinkage must lie in [0, 1), got {0}")]
    InvalidShrinkage(f64),
    #[error("empty input")]
    Empty,
    #[error("Fréchet mean did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("class {0:?} has no examples")]
    EmptyClass(String),
    #[error("need at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("labels ({labels}) and matrices ({matrices}) differ in length")]
    LengthMismatch { labels: usize, matrices: usize },
    #[error("channel index {index} out of range for dimension {dim}")]
    ChannelOutOfRange { index: usize, dim: usize },
    #[error("duplicate channel index {0} in subset")]
    DuplicateChannel(usize),
    #[error("target channel count {target} must satisfy 2 <= target < {current}")]
    TargetOutOfRange { target: usize, current: usize },
    #[error("invalid model document: {0}")]
    Document(String),
}

static CLAMPED_EIGENVALUES: AtomicUsize = AtomicUsize::new(0);

/// Number of eigenvalues raised to the relative floor by matrix functions
/// since process start.
pub fn clamped_eigenvalue_count() -> usize {
    CLAMPED_EIGENVALUES.load(Ordering::Relaxed)
}

/// Relative eigenvalue floor used by matrix square roots and logarithms.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix<T: Real> {
    values: DMatrix<T>,
}

impl<T: Real> SpdMatrix<T> {
    /// Validates symmetry (relative tolerance `1e-10`, or a few ulps for
    /// single precision) and positive definiteness (Cholesky).
    pub fn new(values: DMatrix<T>) -> Result<Self, SpdError> {
        let (rows, cols) = values.shape();
        if rows != cols {
            return Err(SpdError::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(SpdError::Empty);
        }
        if values.iter().any(|v| !v.is_finite_value()) {
            return Err(SpdError::NonFinite);
        }
        let scale = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tol = T::lit(1e-10).max(T::epsilon() * T::lit(16.0));
        let mut worst = T::zero();
        for i in 0..rows {
            for j in (i + 1)..cols {
                worst = worst.max((values[(i, j)] - values[(j, i)]).abs());
            }
        }
        if scale > T::zero() && worst > tol * scale {
            return Err(SpdError::NotSymmetric((worst / scale).as_f64()));
        }
        let values = symmetrize(values);
        if Cholesky::new(values.clone()).is_none() {
            return Err(SpdError::NotPositiveDefinite);
        }
        Ok(Self { values })
    }

    /// Wraps a matrix produced by an SPD-preserving operation.
    pub(crate) fn from_trusted(values: DMatrix<T>) -> Self {
        Self {
            values: symmetrize(values),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            values: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[T]) -> Result<Self, SpdError> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    /// Row-major constructor.
    pub fn from_row_slice(dim: usize, data: &[T]) -> Result<Self, SpdError> {
        if data.len() != dim * dim {
            return Err(SpdError::DimensionMismatch(data.len(), dim * dim));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.values
    }

    /// Principal sub-matrix on the given channel indices (in that order).
    pub fn restrict(&self, channels: &[usize]) -> Result<Self, SpdError> {
        check_subset(channels, self.dim())?;
        Ok(Self {
            values: self.values.select_rows(channels).select_columns(channels),
        })
    }

    /// Congruence `W · A · Wᵀ` with an invertible `W`.
    pub fn congruence(&self, w: &DMatrix<T>) -> Result<Self, SpdError> {
        if w.ncols() != self.dim() || w.nrows() != self.dim() {
            return Err(SpdError::DimensionMismatch(w.ncols(), self.dim()));
        }
        Self::new(symmetrize(w * &self.values * w.transpose()))
    }

    /// Rows of the matrix as nested vectors of `f64`.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.values[(i, j)].as_f64()).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SpdError> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(SpdError::NotSquare {
                rows: dim,
                cols: rows.first().map_or(0, Vec::len),
            });
        }
        let flat: Vec<T> = rows.iter().flatten().map(|&v| T::lit(v)).collect();
        Self::from_row_slice(dim, &flat)
    }
}

pub(crate) fn check_subset(channels: &[usize], dim: usize) -> Result<(), SpdError> {
    let mut seen = vec![false; dim];
    for &c in channels {
        if c >= dim {
            return Err(SpdError::ChannelOutOfRange { index: c, dim });
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(SpdError::DuplicateChannel(c));
        }
    }
    if channels.is_empty() {
        return Err(SpdError::Empty);
    }
    Ok(())
}

fn symmetrize<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    let t = m.transpose();
    (m + t) * T::lit(0.5)
}

/// Applies `f` to the eigenvalues of a symmetric matrix. Eigenvalues below
/// `EIGEN_FLOOR × λ_max` are raised to that floor and counted.
pub(crate) fn eigen_map<T: Real>(m: &DMatrix<T>, f: impl Fn(T) -> T) -> DMatrix<T> {
    let eig = m.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(T::zero(), |a, &b| a.max(b));
    let floor = lmax * T::lit(EIGEN_FLOOR);
    let mut clamped = 0usize;
    let mapped = eig.eigenvalues.map(|l| {
        if l < floor {
            clamped += 1;
            f(floor)
        } else {
            f(l)
        }
    });
    if clamped > 0 {
        CLAMPED_EIGENVALUES.fetch_add(clamped, Ordering::Relaxed);
        log::warn!("clamped {clamped} eigenvalue(s) to {:e} of the largest", EIGEN_FLOOR);
    }
    let v = &eig.eigenvectors;
    symmetrize(v * DMatrix::from_diagonal(&mapped) * v.transpose())
}

pub(crate) fn sqrtm<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    eigen_map(m, |l| l.sqrt())
}

pub(crate) fn invsqrtm<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    eigen_map(m, |l| T::one() / l.sqrt())
}

pub(crate) fn logm<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    eigen_map(m, |l| l.ln())
}

pub(crate) fn expm_sym<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let eig = m.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    symmetrize(v * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.exp())) * v.transpose())
}

/// Shrinkage covariance of a `channels × samples` epoch:
/// `(1 − λ)·S + λ·(tr(S)/dim)·I`, with `S` the mean-removed sample
/// covariance (denominator `samples − 1`).
pub fn covariance<T: Real>(epoch: &DMatrix<T>, shrinkage: T) -> Result<SpdMatrix<T>, SpdError> {
    let (channels, samples) = epoch.shape();
    if samples < 2 {
        return Err(SpdError::TooFewSamples(samples));
    }
    if channels == 0 {
        return Err(SpdError::Empty);
    }
    if !(shrinkage >= T::zero() && shrinkage < T::one()) {
        return Err(SpdError::InvalidShrinkage(shrinkage.as_f64()));
    }
    if epoch.iter().any(|v| !v.is_finite_value()) {
        return Err(SpdError::NonFinite);
    }
    let n = T::from_usize_lossy(samples);
    let mut centered = epoch.clone();
    for mut row in centered.row_iter_mut() {
        let mean = row.sum() / n;
        row.add_scalar_mut(-mean);
    }
    let s = &centered * centered.transpose() / (n - T::one());
    let mu = s.trace() / T::from_usize_lossy(channels);
    let blended = s * (T::one() - shrinkage)
        + DMatrix::<T>::identity(channels, channels) * (shrinkage * mu);
    SpdMatrix::new(symmetrize(blended))
}

/// Affine-invariant Riemannian distance `sqrt(Σ ln² λ_i)`, with `λ_i` the
/// generalized eigenvalues of `(B, A)`.
pub fn riemannian_distance<T: Real>(a: &SpdMatrix<T>, b: &SpdMatrix<T>) -> Result<T, SpdError> {
    if a.dim() != b.dim() {
        return Err(SpdError::DimensionMismatch(a.dim(), b.dim()));
    }
    let chol = Cholesky::<T, Dyn>::new(a.values.clone()).ok_or(SpdError::NotPositiveDefinite)?;
    let l = chol.l();
    // C = L⁻¹ B L⁻ᵀ shares its spectrum with A⁻¹B.
    let x = l
        .solve_lower_triangular(&b.values)
        .ok_or(SpdError::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(SpdError::NotPositiveDefinite)?;
    let eig = symmetrize(c).symmetric_eigenvalues();
    let mut acc = T::zero();
    for &lambda in eig.iter() {
        if !(lambda > T::zero()) {
            return Err(SpdError::NotPositiveDefinite);
        }
        let ln = lambda.ln();
        acc += ln * ln;
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn distance_identity_cases() {
        let i2 = SpdMatrix::<f64>::identity(2);
        assert_eq!(riemannian_distance(&i2, &i2).unwrap(), 0.0);
        let e2 = SpdMatrix::from_diagonal(&[std::f64::consts::E.powi(2); 2]).unwrap();
        assert_relative_eq!(
            riemannian_distance(&i2, &e2).unwrap(),
            2.0 * 2f64.sqrt(),
            max_relative = 1e-12
        );
        let d = SpdMatrix::from_diagonal(&[4.0, 9.0]).unwrap();
        let expected = (4f64.ln().powi(2) + 9f64.ln().powi(2)).sqrt();
        assert_relative_eq!(riemannian_distance(&i2, &d).unwrap(), expected, max_relative = 1e-12);
        assert!((expected - 2.5980).abs() < 1e-4);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let a = SpdMatrix::<f64>::identity(2);
        let b = SpdMatrix::<f64>::identity(3);
        assert_eq!(riemannian_distance(&a, &b), Err(SpdError::DimensionMismatch(2, 3)));
    }

    #[test]
    fn rejects_invalid_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(SpdMatrix::new(asym), Err(SpdError::NotSymmetric(_))));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(SpdMatrix::new(indefinite), Err(SpdError::NotPositiveDefinite));
        let nan = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert_eq!(SpdMatrix::new(nan), Err(SpdError::NonFinite));
        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(SpdMatrix::new(rect), Err(SpdError::NotSquare { .. })));
    }

    #[test]
    fn covariance_hand_computed() {
        // 2 channels × 8 samples.
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let y = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 9.0];
        let epoch = DMatrix::from_row_slice(2, 8, &[x, y].concat());
        let mean = |v: &[f64]| v.iter().sum::<f64>() / 8.0;
        let (mx, my) = (mean(&x), mean(&y));
        let cov = |a: &[f64], ma: f64, b: &[f64], mb: f64| {
            a.iter().zip(b).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / 7.0
        };
        let sxx = cov(&x, mx, &x, mx);
        let syy = cov(&y, my, &y, my);
        let sxy = cov(&x, mx, &y, my);
        let c = covariance(&epoch, 0.0).unwrap();
        assert_relative_eq!(c.values()[(0, 0)], sxx, max_relative = 1e-12);
        assert_relative_eq!(c.values()[(1, 1)], syy, max_relative = 1e-12);
        assert_relative_eq!(c.values()[(0, 1)], sxy, max_relative = 1e-12);

        let lambda = 0.1;
        let mu = (sxx + syy) / 2.0;
        let c = covariance(&epoch, lambda).unwrap();
        assert_relative_eq!(c.values()[(0, 0)], 0.9 * sxx + lambda * mu, max_relative = 1e-12);
        assert_relative_eq!(c.values()[(0, 1)], 0.9 * sxy, max_relative = 1e-12);
    }

    #[test]
    fn shrinkage_rescues_rank_deficiency() {
        let row = [0.3, -1.2, 2.2, 0.1, -0.7, 1.9, -0.4, 0.8, 0.5, -1.1];
        let other = [1.0, 0.2, -0.3, 0.9, -1.5, 0.4, 0.0, -0.6, 1.3, 0.7];
        let epoch = DMatrix::from_row_slice(3, 10, &[row, row, other].concat());
        assert_eq!(covariance(&epoch, 0.0), Err(SpdError::NotPositiveDefinite));
        let c = covariance(&epoch, 0.01).unwrap();
        let min_eig = c.values().clone().symmetric_eigenvalues().min();
        assert!(min_eig > 0.0);
    }

    #[test]
    fn covariance_errors() {
        let one = DMatrix::<f64>::zeros(2, 1);
        assert_eq!(covariance(&one, 0.05), Err(SpdError::TooFewSamples(1)));
        let epoch = DMatrix::from_row_slice(1, 3, &[1.0, f64::INFINITY, 0.0]);
        assert_eq!(covariance(&epoch, 0.05), Err(SpdError::NonFinite));
        let epoch = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 0.0]);
        assert_eq!(covariance(&epoch, 1.0), Err(SpdError::InvalidShrinkage(1.0)));
    }

    #[test]
    fn matrix_functions_invert_each_other() {
        let a = SpdMatrix::from_row_slice(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]).unwrap();
        let r = sqrtm(a.values());
        assert_relative_eq!(&r * &r, a.values().clone(), epsilon = 1e-12);
        let back = expm_sym(&logm(a.values()));
        assert_relative_eq!(back, a.values().clone(), epsilon = 1e-12);
        let isq = invsqrtm(a.values());
        assert_relative_eq!(
            &isq * a.values() * &isq,
            DMatrix::identity(3, 3),
            epsilon = 1e-12
        );
    }

    #[test]
    fn restrict_selects_principal_submatrix() {
        let a = SpdMatrix::from_row_slice(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]).unwrap();
        let s = a.restrict(&[2, 0]).unwrap();
        assert_eq!(s.to_rows(), vec![vec![2.0, 0.5], vec![0.5, 4.0]]);
        assert_eq!(a.restrict(&[0, 0]), Err(SpdError::DuplicateChannel(0)));
        assert!(a.restrict(&[3]).is_err());
    }

    #[test]
    fn single_precision_distance() {
        let i = SpdMatrix::<f32>::identity(3);
        let b = SpdMatrix::from_diagonal(&[2.0f32, 2.0, 2.0]).unwrap();
        let d = riemannian_distance(&i, &b).unwrap();
        assert!((d - 3f32.sqrt() * 2f32.ln()).abs() < 1e-5);
    }
}
