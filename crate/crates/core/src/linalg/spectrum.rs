use serde::Serialize;

use super::eigen::hermitian_eigendecomposition;
use super::{Ket, Operator};
use crate::error::{Error, Result};
use crate::scalar::{creal, Real};

pub const DEFAULT_CLUSTER_TOLERANCE: f64 = 1e-9;

/// Distinct eigenvalues of a Hermitian operator (descending) with an
/// orthonormal eigenbasis for each eigenspace.
#[derive(Clone, Debug, Serialize)]
pub struct HamiltonianSpectrum<T> {
    eigenvalues: Vec<T>,
    groups: Vec<Vec<Ket<T>>>,
    dim: usize,
}

impl<T: Real> HamiltonianSpectrum<T> {
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn groups(&self) -> &[Vec<Ket<T>>] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &[Ket<T>] {
        &self.groups[i]
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Σ_i h_i Σ_k |h_i^(k)⟩⟨h_i^(k)|
    pub fn reconstruct(&self) -> Operator<T> {
        let mut out = Operator::zeros(self.dim, self.dim);
        for (h, group) in self.eigenvalues.iter().zip(&self.groups) {
            for v in group {
                out.add_outer(creal(*h), v, v);
            }
        }
        out
    }
}

/// Groups the spectrum of `h` into distinct eigenvalues.
///
/// Two eigenvalues share a group iff |λa − λb| ≤ tol·max(1, |λa|). Each
/// eigenspace basis is canonicalized by orthonormalizing the projections of
/// computational basis vectors in lexicographic order, so operators that are
/// diagonal in the computational basis yield computational basis states.
pub fn group_spectrum<T: Real>(h: &Operator<T>, tol: T) -> Result<HamiltonianSpectrum<T>> {
    let eig = hermitian_eigendecomposition(h)?;
    let n = h.rows();
    let close = |a: T, b: T| (a - b).abs() <= tol * T::one().max(a.abs());

    let mut clusters: Vec<(T, Vec<usize>)> = Vec::new();
    for (idx, &l) in eig.values.iter().enumerate() {
        match clusters.last_mut() {
            Some((rep, members)) if close(l, *rep) => members.push(idx),
            Some((rep, members)) => {
                let prev = eig.values[*members.last().expect("non-empty cluster")];
                if close(l, prev) {
                    return Err(Error::ClusteringAmbiguity {
                        value: l.as_f64(),
                        left: rep.as_f64(),
                        right: l.as_f64(),
                    });
                }
                clusters.push((l, vec![idx]));
            }
            None => clusters.push((l, vec![idx])),
        }
    }

    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut groups = Vec::with_capacity(clusters.len());
    for (_, members) in &clusters {
        let mean = members.iter().map(|&i| eig.values[i]).sum::<T>() / T::lit(members.len() as f64);
        let raw: Vec<&Ket<T>> = members.iter().map(|&i| &eig.vectors[i]).collect();
        eigenvalues.push(mean);
        groups.push(canonical_basis(&raw, n));
    }
    Ok(HamiltonianSpectrum {
        eigenvalues,
        groups,
        dim: n,
    })
}

fn canonical_basis<T: Real>(raw: &[&Ket<T>], n: usize) -> Vec<Ket<T>> {
    let target = raw.len();
    let mut out: Vec<Ket<T>> = Vec::with_capacity(target);
    let threshold = T::lit(1e-6);
    for k in 0..n {
        if out.len() == target {
            break;
        }
        // P|e_k⟩ = Σ_v v ⟨v|e_k⟩ = Σ_v v conj(v_k)
        let mut cand = Ket::zeros(n);
        for v in raw {
            cand.axpy(v[k].conj(), v);
        }
        for _ in 0..2 {
            for u in &out {
                let c = u.inner(&cand);
                cand.axpy(-c, u);
            }
        }
        let norm = cand.norm();
        if norm > threshold {
            out.push(cand.scaled(creal(T::one() / norm)));
        }
    }
    if out.len() < target {
        // Numerically awkward eigenspace; fall back to the solver's basis.
        return raw.iter().map(|v| (*v).clone()).collect();
    }
    out
}
