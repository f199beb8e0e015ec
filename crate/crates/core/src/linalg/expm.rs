use num_traits::One;

use super::Operator;
use crate::scalar::{creal, Cplx, Real};

const TAYLOR_TERMS: usize = 24;

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// Intended for the modest dimensions used as a reference solution; the
/// scaling brings the 1-norm below 1/2 before the series is summed.
pub fn expm<T: Real>(a: &Operator<T>) -> Operator<T> {
    let n = a.rows();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<T>())
        .fold(T::zero(), T::max);
    let mut squarings = 0u32;
    let mut scale = T::one();
    let half = T::lit(0.5);
    while norm1 * scale > half {
        scale = scale * half;
        squarings += 1;
    }
    let x = a.scaled_real(scale);
    let mut term = Operator::identity(n);
    let mut sum = Operator::identity(n);
    for k in 1..=TAYLOR_TERMS {
        term = term.matmul(&x);
        term.scale_mut(creal(T::one() / T::lit(k as f64)));
        sum.axpy(Cplx::one(), &term);
        if term.max_abs() <= T::epsilon() * T::lit(1e-3) * sum.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}
