//! Correctable-space bases, engineered dissipation, and the CPTP projector onto the code space.

use num_traits::One;
use serde::Serialize;

use crate::code_search::CodePair;
use crate::error::{Error, Result};
use crate::linalg::{Ket, LowRankOperator, Operator};
use crate::noise::ErrorStructure;
use crate::scalar::{creal, Cplx, Real};

pub const DEPENDENCE_TOL: f64 = 1e-10;
pub const OVERLAP_TOL: f64 = 1e-9;
pub const RESET_TOL: f64 = 1e-10;
pub const BLOCK_FORM_TOL: f64 = 1e-9;

/// Orthonormal decomposition of the Hilbert space into code space, correctable
/// error spaces of orders 1..=c, and the residual space.
#[derive(Clone, Debug, Serialize)]
pub struct CorrectableBasis<T> {
    code: [Ket<T>; 2],
    /// error_bases[n - 1][α] lists |μ^[n]_{α,i}⟩.
    error_bases: Vec<[Vec<Ket<T>>; 2]>,
    residual: Vec<Ket<T>>,
    /// Index of the generating operator within E^[n] for each kept vector.
    generators: Vec<Vec<usize>>,
    dim: usize,
}

impl<T: Real> CorrectableBasis<T> {
    pub fn order(&self) -> usize {
        self.error_bases.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codeword(&self, alpha: usize) -> &Ket<T> {
        &self.code[alpha]
    }

    /// |μ^[n]_{α,·}⟩ for n >= 1; n = 0 yields the codeword itself.
    pub fn error_basis(&self, n: usize, alpha: usize) -> &[Ket<T>] {
        if n == 0 {
            std::slice::from_ref(&self.code[alpha])
        } else {
            &self.error_bases[n - 1][alpha]
        }
    }

    pub fn residual_basis(&self) -> &[Ket<T>] {
        &self.residual
    }

    /// Generating operator index within E^[n] for each basis vector of order n.
    pub fn generators(&self, n: usize) -> &[usize] {
        &self.generators[n - 1]
    }

    /// p_0..=p_c with p_0 = 1.
    pub fn p(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(self.error_bases.iter().map(|b| b[0].len()))
            .collect()
    }

    pub fn q_max(&self) -> usize {
        self.residual.len()
    }

    /// Π^[n]: projector onto the order-n spaces of both codewords (n = 0 is Π_C).
    pub fn order_projector(&self, n: usize) -> Operator<T> {
        let mut p = Operator::zeros(self.dim, self.dim);
        for alpha in 0..2 {
            for v in self.error_basis(n, alpha) {
                p.add_outer(Cplx::one(), v, v);
            }
        }
        p
    }

    pub fn code_projector(&self) -> Operator<T> {
        self.order_projector(0)
    }

    pub fn residual_projector(&self) -> Operator<T> {
        Operator::projector(&self.residual, self.dim)
    }

    /// Every listed vector, code space first, then orders 1..=c, then residual.
    pub fn all_vectors(&self) -> Vec<Ket<T>> {
        let mut out: Vec<Ket<T>> = self.code.to_vec();
        for level in &self.error_bases {
            out.extend(level[0].iter().cloned());
            out.extend(level[1].iter().cloned());
        }
        out.extend(self.residual.iter().cloned());
        out
    }
}

fn project_out<T: Real>(v: &mut Ket<T>, against: &[Ket<T>]) {
    // modified Gram–Schmidt, two passes
    for _ in 0..2 {
        for u in against {
            let c = u.inner(v);
            v.axpy(-c, u);
        }
    }
}

fn phase_of<T: Real>(v: &Ket<T>) -> Cplx<T> {
    match v.first_significant(T::lit(1e-12)) {
        Some((_, a)) => (a / creal(a.norm())).conj(),
        None => Cplx::one(),
    }
}

/// Gram–Schmidt over (|μ_α⟩, E^[1]|μ_α⟩, …, E^[c]|μ_α⟩) for both codewords in lockstep.
///
/// A candidate is kept only when its projected norm exceeds 1e-10 for both
/// codewords; a split decision means the two error spaces have different
/// dimensions. Each kept α = 0 vector is rotated so its first significant
/// amplitude is real positive, and the same phase is applied to its α = 1
/// partner so that the pairing used by the correction operators is preserved.
pub fn build_correctable_basis<T: Real>(
    code: &CodePair<T>,
    errs: &ErrorStructure<T>,
    c: usize,
) -> Result<CorrectableBasis<T>> {
    if c == 0 || c > errs.order() {
        return Err(Error::InvalidInput(format!(
            "order {c} outside the available error structure (1..={})",
            errs.order()
        )));
    }
    let dim = code.dim();
    if errs.dim() != dim {
        return Err(Error::DimensionMismatch {
            context: "codeword vs error operators",
            expected: errs.dim(),
            found: dim,
        });
    }
    let tol = T::lit(DEPENDENCE_TOL);
    let mut acc: [Vec<Ket<T>>; 2] = [vec![code.mu0.clone()], vec![code.mu1.clone()]];
    let mut error_bases = Vec::with_capacity(c);
    let mut generators = Vec::with_capacity(c);
    for n in 1..=c {
        let mut level: [Vec<Ket<T>>; 2] = [Vec::new(), Vec::new()];
        let mut gens = Vec::new();
        let mut counts = [0usize; 2];
        for (idx, e) in errs.level(n).iter().enumerate() {
            let mut cand = [e.apply(&code.mu0), e.apply(&code.mu1)];
            project_out(&mut cand[0], &acc[0]);
            project_out(&mut cand[1], &acc[1]);
            let norms = [cand[0].norm(), cand[1].norm()];
            let keep = [norms[0] > tol, norms[1] > tol];
            counts[0] += keep[0] as usize;
            counts[1] += keep[1] as usize;
            if keep[0] != keep[1] {
                continue;
            }
            if !keep[0] {
                continue;
            }
            let phase = phase_of(&cand[0]);
            for a in 0..2 {
                let v = cand[a].scaled(phase * creal(T::one() / norms[a]));
                acc[a].push(v.clone());
                level[a].push(v);
            }
            gens.push(idx);
        }
        if counts[0] != counts[1] {
            return Err(Error::DimensionSplitMismatch {
                order: n,
                left: counts[0],
                right: counts[1],
            });
        }
        error_bases.push(level);
        generators.push(gens);
    }

    let mut overlap = T::zero();
    for u in &acc[0] {
        for v in &acc[1] {
            overlap = overlap.max(u.inner(v).norm());
        }
    }
    if overlap > T::lit(OVERLAP_TOL) {
        return Err(Error::ErrorSpaceOverlap {
            overlap: overlap.as_f64(),
        });
    }

    let mut span: Vec<Ket<T>> = acc[0].iter().chain(&acc[1]).cloned().collect();
    let target = dim - span.len();
    let mut residual = Vec::with_capacity(target);
    let keep = T::lit(1e-6);
    for k in 0..dim {
        if residual.len() == target {
            break;
        }
        let mut v = Ket::basis(dim, k);
        project_out(&mut v, &span);
        let norm = v.norm();
        if norm > keep {
            let phase = phase_of(&v);
            let v = v.scaled(phase * creal(T::one() / norm));
            span.push(v.clone());
            residual.push(v);
        }
    }

    Ok(CorrectableBasis {
        code: [code.mu0.clone(), code.mu1.clone()],
        error_bases,
        residual,
        generators,
        dim,
    })
}

/// Which family an engineered operator belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EngineeredKind {
    /// L^[n]_{E,i} = Σ_j |μ_j⟩⟨μ^[n]_{j,i}|
    Correction { order: usize, index: usize },
    /// L^[res]_{E,q} = |Φ_q⟩⟨φ_q|
    Reset { index: usize },
}

#[derive(Clone, Debug)]
pub struct EngineeredOperator<T> {
    pub kind: EngineeredKind,
    pub op: LowRankOperator<T>,
}

/// Engineered dissipation for AutoQEC up to order c, applied at rate Rκ.
#[derive(Clone, Debug)]
pub struct AutoQecScheme<T> {
    basis: CorrectableBasis<T>,
    ops: Vec<EngineeredOperator<T>>,
    reset_targets: Vec<Ket<T>>,
    r: T,
    kappa: T,
}

impl<T: Real> AutoQecScheme<T> {
    pub fn basis(&self) -> &CorrectableBasis<T> {
        &self.basis
    }

    pub fn engineered_ops(&self) -> &[EngineeredOperator<T>] {
        &self.ops
    }

    pub fn correction_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|o| matches!(o.kind, EngineeredKind::Correction { .. }))
            .count()
    }

    pub fn reset_count(&self) -> usize {
        self.ops.len() - self.correction_count()
    }

    pub fn reset_targets(&self) -> &[Ket<T>] {
        &self.reset_targets
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// Rκ
    pub fn rate(&self) -> T {
        self.r * self.kappa
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    pub fn with_r(&self, r: T) -> Self {
        let mut s = self.clone();
        s.r = r;
        s
    }

    /// L̃_E[ρ] = Σ D[L_E] ρ over all engineered operators (rate not included).
    pub fn dissipator(&self, rho: &Operator<T>) -> Operator<T> {
        let d = self.dim();
        let mut out = Operator::zeros(d, d);
        let mut gram = Operator::zeros(d, d);
        for o in &self.ops {
            o.op.add_conjugation(T::one(), rho, &mut out);
            gram.axpy(Cplx::one(), &o.op.gram());
        }
        let half = creal(T::lit(-0.5));
        out.axpy(half, &gram.anticommutator(rho));
        out
    }
}

/// Builds the correction and reset operators. Reset targets default to
/// (|μ₀⟩ + |μ₁⟩)/√2; a single supplied target is used for every residual vector.
pub fn build_engineered_dissipation<T: Real>(
    basis: &CorrectableBasis<T>,
    reset_targets: Option<&[Ket<T>]>,
    r: T,
    kappa: T,
) -> Result<AutoQecScheme<T>> {
    let dim = basis.dim;
    let q = basis.q_max();
    let default = basis.code[0].add(&basis.code[1]).scaled(creal(T::FRAC_1_SQRT_2()));
    let targets: Vec<Ket<T>> = match reset_targets {
        None => vec![default; q],
        Some([one]) => vec![one.clone(); q],
        Some(list) if list.len() == q => list.to_vec(),
        Some(list) => {
            return Err(Error::DimensionMismatch {
                context: "reset targets (one or q_max)",
                expected: q,
                found: list.len(),
            })
        }
    };
    for (index, phi) in targets.iter().enumerate() {
        if phi.dim() != dim || (phi.norm() - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::InvalidInput(format!(
                "reset target {index} must be a normalized {dim}-dimensional state"
            )));
        }
        let mut leak = phi.clone();
        for c in &basis.code {
            let a = c.inner(phi);
            leak.axpy(-a, c);
        }
        let leak = leak.norm();
        if leak > T::lit(RESET_TOL) {
            return Err(Error::ResetOutsideCodeSpace {
                index,
                leak: leak.as_f64(),
            });
        }
    }

    let mut ops = Vec::new();
    for n in 1..=basis.order() {
        for i in 0..basis.error_bases[n - 1][0].len() {
            let terms = (0..2)
                .map(|j| (basis.code[j].clone(), basis.error_bases[n - 1][j][i].clone()))
                .collect();
            ops.push(EngineeredOperator {
                kind: EngineeredKind::Correction { order: n, index: i },
                op: LowRankOperator::new(dim, terms),
            });
        }
    }
    for (index, (phi_target, phi)) in targets.iter().zip(&basis.residual).enumerate() {
        ops.push(EngineeredOperator {
            kind: EngineeredKind::Reset { index },
            op: LowRankOperator::new(dim, vec![(phi_target.clone(), phi.clone())]),
        });
    }
    Ok(AutoQecScheme {
        basis: basis.clone(),
        ops,
        reset_targets: targets,
        r,
        kappa,
    })
}

/// P̃_E[ρ] = Π_C ρ Π_C + Σ L^[n]_E ρ L^[n]†_E + Σ L^[res]_E ρ L^[res]†_E, held as Kraus operators.
#[derive(Clone, Debug)]
pub struct CptpProjector<T> {
    kraus: Vec<LowRankOperator<T>>,
    dim: usize,
}

impl<T: Real> CptpProjector<T> {
    pub fn apply(&self, rho: &Operator<T>) -> Operator<T> {
        let mut out = Operator::zeros(self.dim, self.dim);
        for k in &self.kraus {
            k.add_conjugation(T::one(), rho, &mut out);
        }
        out
    }

    pub fn kraus(&self) -> &[LowRankOperator<T>] {
        &self.kraus
    }

    /// Σ K†K; the identity when the basis is complete.
    pub fn completeness(&self) -> Operator<T> {
        let mut s = Operator::zeros(self.dim, self.dim);
        for k in &self.kraus {
            s.axpy(Cplx::one(), &k.gram());
        }
        s
    }

    /// Dense d²×d² matrix acting on row-major vec(ρ): vec(KρK†) = (K ⊗ K̄) vec(ρ).
    pub fn superoperator(&self) -> Operator<T> {
        let d2 = self.dim * self.dim;
        let mut s = Operator::zeros(d2, d2);
        for k in &self.kraus {
            let dense = k.to_operator();
            s.axpy(Cplx::one(), &dense.kron(&dense.conj()));
        }
        s
    }
}

pub fn cptp_projector<T: Real>(scheme: &AutoQecScheme<T>) -> CptpProjector<T> {
    let dim = scheme.dim();
    let code = &scheme.basis.code;
    let mut kraus = vec![LowRankOperator::new(
        dim,
        vec![(code[0].clone(), code[0].clone()), (code[1].clone(), code[1].clone())],
    )];
    kraus.extend(scheme.ops.iter().map(|o| o.op.clone()));
    CptpProjector { kraus, dim }
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockFormReport {
    pub residual: f64,
    pub passes: bool,
}

/// Distance between H and Σ_{j,n,i} h_j |μ^[n]_{j,i}⟩⟨μ^[n]_{j,i}| + Π_res H Π_res.
pub fn verify_hamiltonian_block_form<T: Real>(
    h: &Operator<T>,
    basis: &CorrectableBasis<T>,
    code: &CodePair<T>,
) -> BlockFormReport {
    let pr = basis.residual_projector();
    let mut target = pr.matmul(h).matmul(&pr);
    let hs = [code.h0, code.h1];
    for n in 0..=basis.order() {
        for (alpha, &hj) in hs.iter().enumerate() {
            for v in basis.error_basis(n, alpha) {
                target.add_outer(creal(hj), v, v);
            }
        }
    }
    let residual = h.max_abs_diff(&target).as_f64();
    BlockFormReport {
        residual,
        passes: residual < BLOCK_FORM_TOL,
    }
}
