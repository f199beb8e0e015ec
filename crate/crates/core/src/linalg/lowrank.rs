use num_traits::{One, Zero};

use super::{Ket, Operator};
use crate::scalar::{Cplx, Real};

/// Σ_k |a_k⟩⟨b_k|, kept factored so that K ρ K† costs O(r² d²) instead of O(d³).
#[derive(Clone, Debug)]
pub struct LowRankOperator<T> {
    terms: Vec<(Ket<T>, Ket<T>)>,
    dim: usize,
}

impl<T: Real> LowRankOperator<T> {
    pub fn new(dim: usize, terms: Vec<(Ket<T>, Ket<T>)>) -> Self {
        debug_assert!(terms.iter().all(|(a, b)| a.dim() == dim && b.dim() == dim));
        LowRankOperator { terms, dim }
    }

    pub fn terms(&self) -> &[(Ket<T>, Ket<T>)] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank_bound(&self) -> usize {
        self.terms.len()
    }

    pub fn to_operator(&self) -> Operator<T> {
        let mut m = Operator::zeros(self.dim, self.dim);
        for (a, b) in &self.terms {
            m.add_outer(Cplx::one(), a, b);
        }
        m
    }

    pub fn apply(&self, v: &Ket<T>) -> Ket<T> {
        let mut out = Ket::zeros(self.dim);
        for (a, b) in &self.terms {
            out.axpy(b.inner(v), a);
        }
        out
    }

    /// K† K = Σ_kl ⟨a_k|a_l⟩ |b_k⟩⟨b_l|
    pub fn gram(&self) -> Operator<T> {
        let mut m = Operator::zeros(self.dim, self.dim);
        for (ak, bk) in &self.terms {
            for (al, bl) in &self.terms {
                let c = ak.inner(al);
                if !c.is_zero() {
                    m.add_outer(c, bk, bl);
                }
            }
        }
        m
    }

    /// out += factor · K ρ K†
    pub fn add_conjugation(&self, factor: T, rho: &Operator<T>, out: &mut Operator<T>) {
        // K ρ K† = Σ_kl ⟨b_k|ρ|b_l⟩ |a_k⟩⟨a_l|
        let rb: Vec<Ket<T>> = self.terms.iter().map(|(_, b)| rho.apply(b)).collect();
        for (ak, bk) in &self.terms {
            for ((al, _), rbl) in self.terms.iter().zip(&rb) {
                let c = bk.inner(rbl) * factor;
                if !c.is_zero() {
                    out.add_outer(c, ak, al);
                }
            }
        }
    }

    pub fn conjugate(&self, rho: &Operator<T>) -> Operator<T> {
        let mut out = Operator::zeros(self.dim, self.dim);
        self.add_conjugation(T::one(), rho, &mut out);
        out
    }
}
