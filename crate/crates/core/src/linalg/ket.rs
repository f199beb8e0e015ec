use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::{creal, Cplx, Real};

/// Dense state vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ket<T> {
    amps: Vec<Cplx<T>>,
}

impl<T: Real> Ket<T> {
    pub fn from_amplitudes(amps: Vec<Cplx<T>>) -> Self {
        Ket { amps }
    }

    pub fn from_real(values: &[T]) -> Self {
        Ket {
            amps: values.iter().map(|&v| creal(v)).collect(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Ket {
            amps: vec![Cplx::zero(); dim],
        }
    }

    /// Computational basis vector |index⟩.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut k = Self::zeros(dim);
        k.amps[index] = Cplx::one();
        k
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Cplx<T>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Cplx<T>> {
        self.amps
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &Ket<T>) -> Cplx<T> {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(Cplx::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - T::one()).abs() < T::lit(1e-12)
    }

    /// Returns the normalized vector, or `None` for a zero vector.
    pub fn normalized(&self) -> Option<Ket<T>> {
        let n = self.norm();
        if n <= T::zero() {
            return None;
        }
        Some(self.scaled(creal(T::one() / n)))
    }

    pub fn scaled(&self, factor: Cplx<T>) -> Ket<T> {
        Ket {
            amps: self.amps.iter().map(|&a| a * factor).collect(),
        }
    }

    pub fn scale_mut(&mut self, factor: Cplx<T>) {
        for a in &mut self.amps {
            *a = *a * factor;
        }
    }

    /// self += factor * other
    pub fn axpy(&mut self, factor: Cplx<T>, other: &Ket<T>) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a = *a + factor * b;
        }
    }

    pub fn add(&self, other: &Ket<T>) -> Ket<T> {
        let mut out = self.clone();
        out.axpy(Cplx::one(), other);
        out
    }

    pub fn sub(&self, other: &Ket<T>) -> Ket<T> {
        let mut out = self.clone();
        out.axpy(-Cplx::<T>::one(), other);
        out
    }

    /// Tensor product |self⟩ ⊗ |other⟩.
    pub fn kron(&self, other: &Ket<T>) -> Ket<T> {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(*a * b);
            }
        }
        Ket { amps }
    }

    /// Index and value of the first amplitude with magnitude above `tol`.
    pub fn first_significant(&self, tol: T) -> Option<(usize, Cplx<T>)> {
        self.amps
            .iter()
            .enumerate()
            .find(|(_, a)| a.norm() > tol)
            .map(|(i, a)| (i, *a))
    }

    /// Maximum entrywise distance.
    pub fn max_abs_diff(&self, other: &Ket<T>) -> T {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn cast<U: Real>(&self) -> Ket<U> {
        Ket {
            amps: self
                .amps
                .iter()
                .map(|a| Cplx::new(U::lit(a.re.as_f64()), U::lit(a.im.as_f64())))
                .collect(),
        }
    }
}

impl<T> Index<usize> for Ket<T> {
    type Output = Cplx<T>;
    fn index(&self, i: usize) -> &Cplx<T> {
        &self.amps[i]
    }
}

impl<T> IndexMut<usize> for Ket<T> {
    fn index_mut(&mut self, i: usize) -> &mut Cplx<T> {
        &mut self.amps[i]
    }
}
