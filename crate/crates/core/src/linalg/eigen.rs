//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Each rotation first removes the phase of the pivot entry with a diagonal
//! unitary, then applies a real Givens rotation that annihilates it. Sweeps
//! run until the off-diagonal mass is negligible relative to the matrix norm.

use num_traits::{One, Zero};

use super::{Ket, Operator};
use crate::error::{Error, Result};
use crate::scalar::{creal, Cplx, Real};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Ket<T>>,
}

impl<T: Real> EigenDecomposition<T> {
    /// V diag(λ) V^dagger
    pub fn reconstruct(&self) -> Operator<T> {
        let n = self.values.len();
        let mut out = Operator::zeros(n, n);
        for (v, &l) in self.vectors.iter().zip(&self.values) {
            out.add_outer(creal(l), v, v);
        }
        out
    }

    pub fn min_value(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }
}

/// Decomposes a Hermitian operator; rejects inputs further than 1e-10 from Hermitian.
pub fn hermitian_eigendecomposition<T: Real>(a: &Operator<T>) -> Result<EigenDecomposition<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "eigendecomposition (square input)",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let dev = a.hermiticity_error();
    let scale = T::one().max(a.max_abs());
    if dev > T::lit(1e-10) * scale {
        return Err(Error::NotHermitian {
            deviation: dev.as_f64(),
        });
    }
    Ok(jacobi(a.hermitian_part()))
}

/// Eigenvalues only, descending.
pub fn hermitian_eigenvalues<T: Real>(a: &Operator<T>) -> Result<Vec<T>> {
    hermitian_eigendecomposition(a).map(|e| e.values)
}

fn off_diagonal_norm_sqr<T: Real>(m: &Operator<T>) -> T {
    let n = m.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s = s + m[(i, j)].norm_sqr();
            }
        }
    }
    s
}

fn jacobi<T: Real>(mut a: Operator<T>) -> EigenDecomposition<T> {
    let n = a.rows();
    let mut v = Operator::<T>::identity(n);
    let total = a.frobenius_norm().powi(2);
    let threshold = (T::epsilon() * T::epsilon()) * total.max(T::min_positive_value());

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm_sqr(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= T::min_positive_value() {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Skip rotations that would not change anything at working precision.
                let tiny = T::epsilon() * T::lit(1e-2) * (app.abs() + aqq.abs());
                if r < tiny {
                    a[(p, q)] = Cplx::zero();
                    a[(q, p)] = Cplx::zero();
                    continue;
                }
                let phase = apq / creal(r); // e^{i phi}
                let theta = (aqq - app) / (T::lit(2.0) * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                let e_minus = phase.conj();
                // J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] acting on (p, q)
                let j_pp = creal(c);
                let j_pq = creal(s);
                let j_qp = e_minus * (-s);
                let j_qq = e_minus * c;

                // A <- A J (columns p, q)
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * j_pp + akq * j_qp;
                    a[(k, q)] = akp * j_pq + akq * j_qq;
                }
                // A <- J^dagger A (rows p, q)
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = j_pp.conj() * apk + j_qp.conj() * aqk;
                    a[(q, k)] = j_pq.conj() * apk + j_qq.conj() * aqk;
                }
                a[(p, q)] = Cplx::zero();
                a[(q, p)] = Cplx::zero();
                a[(p, p)] = creal(a[(p, p)].re);
                a[(q, q)] = creal(a[(q, q)].re);
                // V <- V J
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * j_pp + vkq * j_qp;
                    v[(k, q)] = vkp * j_pq + vkq * j_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .re
            .partial_cmp(&a[(i, i)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = order.iter().map(|&i| v.column(i)).collect();
    EigenDecomposition { values, vectors }
}

/// Applies `f` to the spectrum of a Hermitian operator.
pub fn hermitian_function<T: Real>(a: &Operator<T>, f: impl Fn(T) -> T) -> Result<Operator<T>> {
    let eig = hermitian_eigendecomposition(a)?;
    let n = a.rows();
    let mut out = Operator::zeros(n, n);
    for (v, &l) in eig.vectors.iter().zip(&eig.values) {
        out.add_outer(creal(f(l)), v, v);
    }
    Ok(out)
}

/// Orthonormality defect max |⟨v_i|v_j⟩ - δ_ij|.
pub fn orthonormality_error<T: Real>(vectors: &[Ket<T>]) -> T {
    let mut worst = T::zero();
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate().skip(i) {
            let target = if i == j { Cplx::one() } else { Cplx::zero() };
            worst = worst.max((a.inner(b) - target).norm());
        }
    }
    worst
}
