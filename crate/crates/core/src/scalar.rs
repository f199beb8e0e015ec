//! Scalar abstractions.
//!
//! All quantum linear algebra is generic over a real floating point type
//! [`Real`] (`f32` or `f64`); amplitudes are `Complex<T>`. The feasibility
//! solver is generic over [`LpScalar`], which additionally admits exact
//! rationals so that floating point verdicts can be rechecked exactly.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal (tolerances, physical constants).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex amplitude over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

#[inline]
pub fn creal<T: Real>(re: T) -> Cplx<T> {
    Complex::new(re, T::zero())
}

/// Ordered field used by the simplex solver.
///
/// Floating point implementations use small absolute thresholds for pivot
/// selection and feasibility; the rational implementation uses exact zero.
pub trait LpScalar: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive {
    /// Entries with magnitude at or below this are treated as zero when pivoting.
    fn pivot_tolerance() -> Self;
    /// Phase-one objective above this value means infeasible.
    fn feasibility_tolerance() -> Self;
    fn to_f64_lossy(&self) -> f64;
}

impl LpScalar for f64 {
    fn pivot_tolerance() -> Self {
        1e-11
    }
    fn feasibility_tolerance() -> Self {
        1e-9
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl LpScalar for f32 {
    fn pivot_tolerance() -> Self {
        1e-6
    }
    fn feasibility_tolerance() -> Self {
        1e-5
    }
    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl LpScalar for BigRational {
    fn pivot_tolerance() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
    fn feasibility_tolerance() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}
