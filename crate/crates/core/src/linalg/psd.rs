use super::eigen::hermitian_eigendecomposition;
use super::RealMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const NEGATIVE_CLIP: f64 = 1e-10;

/// Symmetric PSD square root D of a real symmetric matrix C, so that DᵀD = C.
///
/// Eigenvalues in [−1e-10, 0) are clipped to zero; anything more negative is rejected.
pub fn matrix_sqrt_psd<T: Real>(c: &RealMatrix<T>) -> Result<RealMatrix<T>> {
    if c.rows() != c.cols() {
        return Err(Error::DimensionMismatch {
            context: "correlation matrix (square)",
            expected: c.rows(),
            found: c.cols(),
        });
    }
    let n = c.rows();
    if n == 0 {
        return Ok(RealMatrix::zeros(0, 0));
    }
    if c.symmetry_error() > T::lit(1e-12) * T::one().max(c.data().iter().fold(T::zero(), |m, x| m.max(x.abs()))) {
        return Err(Error::InvalidInput("correlation matrix is not symmetric".into()));
    }
    let eig = hermitian_eigendecomposition(&c.to_operator())?;
    let min = eig.min_value();
    if min < -T::lit(NEGATIVE_CLIP) {
        return Err(Error::NotPsd {
            min_eigenvalue: min.as_f64(),
        });
    }
    let mut d = RealMatrix::zeros(n, n);
    for (v, &l) in eig.vectors.iter().zip(&eig.values) {
        let s = l.max(T::zero()).sqrt();
        if s == T::zero() {
            continue;
        }
        // Eigenvectors of a real symmetric matrix can be chosen real; remove any global phase.
        let phase = v
            .first_significant(T::lit(1e-12))
            .map(|(_, a)| a / num_complex::Complex::new(a.norm(), T::zero()))
            .unwrap_or_else(|| num_complex::Complex::new(T::one(), T::zero()));
        let real: Vec<T> = v.amplitudes().iter().map(|a| (a / phase).re).collect();
        for i in 0..n {
            for j in 0..n {
                d[(i, j)] = d[(i, j)] + s * real[i] * real[j];
            }
        }
    }
    Ok(d)
}
