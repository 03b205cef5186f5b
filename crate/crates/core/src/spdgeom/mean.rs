use nalgebra::DMatrix;

use super::{expm_sym, invsqrtm, logm, sqrtm, SpdError, SpdMatrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetOptions<T> {
    /// Stop once `‖Σ_i log(M^{-1/2} A_i M^{-1/2})‖_F ≤ tol`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for FrechetOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-8),
            max_iter: 50,
        }
    }
}

fn log_sum<T: Real>(m: &DMatrix<T>, mats: &[SpdMatrix<T>]) -> (DMatrix<T>, DMatrix<T>) {
    let isq = invsqrtm(m);
    let dim = m.nrows();
    let mut sum = DMatrix::<T>::zeros(dim, dim);
    for a in mats {
        sum += logm(&(&isq * a.values() * &isq));
    }
    (sum, isq)
}

/// Frobenius norm of the Riemannian gradient sum at `m`; zero at the
/// Fréchet mean.
pub fn frechet_residual<T: Real>(m: &SpdMatrix<T>, mats: &[SpdMatrix<T>]) -> T {
    log_sum(m.values(), mats).0.norm()
}

/// Fréchet mean under the affine-invariant metric.
///
/// Starts at the arithmetic mean and iterates
/// `M ← M^{1/2} exp(mean_i log(M^{-1/2} A_i M^{-1/2})) M^{1/2}` (unit step).
/// The returned matrix satisfies the residual bound in `opts`.
pub fn frechet_mean<T: Real>(
    mats: &[SpdMatrix<T>],
    opts: FrechetOptions<T>,
) -> Result<SpdMatrix<T>, SpdError> {
    let first = mats.first().ok_or(SpdError::Empty)?;
    let dim = first.dim();
    if let Some(bad) = mats.iter().find(|m| m.dim() != dim) {
        return Err(SpdError::DimensionMismatch(dim, bad.dim()));
    }
    if mats.len() == 1 {
        return Ok(first.clone());
    }
    let count = T::from_usize_lossy(mats.len());
    let mut m = mats
        .iter()
        .fold(DMatrix::<T>::zeros(dim, dim), |acc, a| acc + a.values())
        / count;

    let mut residual = T::zero();
    for _ in 0..=opts.max_iter {
        let (sum, _) = log_sum(&m, mats);
        residual = sum.norm();
        if residual <= opts.tol {
            return Ok(SpdMatrix::from_trusted(m));
        }
        let sq = sqrtm(&m);
        m = &sq * expm_sym(&(sum / count)) * &sq;
    }
    Err(SpdError::NoConvergence {
        iterations: opts.max_iter,
        residual: residual.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_matrix_is_its_own_mean() {
        let a = SpdMatrix::from_row_slice(2, &[2.0, 0.3, 0.3, 1.0]).unwrap();
        assert_eq!(frechet_mean(&[a.clone()], FrechetOptions::default()).unwrap(), a);
    }

    #[test]
    fn commuting_pair_gives_geometric_mean() {
        let a = SpdMatrix::from_diagonal(&[1.0, 1.0]).unwrap();
        let b = SpdMatrix::from_diagonal(&[4.0, 4.0]).unwrap();
        let m = frechet_mean(&[a, b], FrechetOptions::default()).unwrap();
        assert_relative_eq!(m.values().clone(), DMatrix::from_diagonal_element(2, 2, 2.0), epsilon = 1e-12);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert_eq!(
            frechet_mean::<f64>(&[], FrechetOptions::default()),
            Err(SpdError::Empty)
        );
        let a = SpdMatrix::<f64>::identity(2);
        let b = SpdMatrix::<f64>::identity(3);
        assert_eq!(
            frechet_mean(&[a, b], FrechetOptions::default()),
            Err(SpdError::DimensionMismatch(2, 3))
        );
    }

    #[test]
    fn reports_non_convergence() {
        let a = SpdMatrix::from_row_slice(2, &[10.0, 3.0, 3.0, 1.0]).unwrap();
        let b = SpdMatrix::from_row_slice(2, &[1.0, -0.5, -0.5, 8.0]).unwrap();
        let err = frechet_mean(&[a, b], FrechetOptions { tol: 0.0, max_iter: 1 }).unwrap_err();
        assert!(matches!(err, SpdError::NoConvergence { iterations: 1, .. }));
    }
}
