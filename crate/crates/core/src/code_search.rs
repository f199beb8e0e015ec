//! Code search: A-matrices, LP feasibility, and the Knill–Laflamme / HNLS /
//! P1 / P2 diagnostics.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::CorrectableBasis;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, HamiltonianSpectrum, Ket, Operator};
use crate::lp::{solve_standard_form, LpStatus};
use crate::noise::ErrorStructure;
use crate::scalar::{creal, Cplx, Real};

pub const KL_TOL: f64 = 1e-9;
pub const LP_RESIDUAL_TOL: f64 = 1e-8;
pub const HNLS_TOL: f64 = 1e-8;
pub const P_TOL: f64 = 1e-10;
pub const ILL_CONDITIONED: f64 = 1e12;

const ZERO_ROW: f64 = 1e-12;
const CLIP: f64 = 1e-12;
const SUM_TOL: f64 = 1e-9;
const GAP_TIE: f64 = 1e-9;

/// Rows are K^[~c] elements; the first `split` columns belong to group i, the rest to group j.
#[derive(Clone, Debug)]
pub struct AMatrix<T> {
    entries: Operator<T>,
    pair: (usize, usize),
    split: usize,
}

impl<T: Real> AMatrix<T> {
    /// Wraps raw entries; columns `0..split` form the first block.
    pub fn new(entries: Operator<T>, pair: (usize, usize), split: usize) -> Result<Self> {
        if split == 0 || split >= entries.cols() {
            return Err(Error::InvalidInput(format!(
                "block split {split} must leave both blocks nonempty ({} columns)",
                entries.cols()
            )));
        }
        Ok(AMatrix { entries, pair, split })
    }

    pub fn entries(&self) -> &Operator<T> {
        &self.entries
    }

    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }

    /// N_i, the width of the first block.
    pub fn split(&self) -> usize {
        self.split
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    /// Largest violation of the LP constraints by a candidate (p_i, p_j):
    /// max(‖Re(A)p‖∞, ‖Im(A)p‖∞, |Σp_i − 1|, |Σp_j − 1|), plus any negativity.
    pub fn constraint_residual(&self, p_i: &[T], p_j: &[T]) -> T {
        let p: Vec<T> = p_i.iter().chain(p_j).copied().collect();
        let mut worst = T::zero();
        for r in 0..self.rows() {
            let s = self
                .entries
                .row(r)
                .iter()
                .zip(&p)
                .fold(Cplx::<T>::zero(), |acc, (a, x)| acc + *a * *x);
            worst = worst.max(s.re.abs()).max(s.im.abs());
        }
        let si: T = p_i.iter().copied().sum();
        let sj: T = p_j.iter().copied().sum();
        worst = worst.max((si - T::one()).abs()).max((sj - T::one()).abs());
        for &x in &p {
            if x < T::zero() {
                worst = worst.max(-x);
            }
        }
        worst
    }
}

/// [A]_{k,l} = ⟨h_i^(l)|K_k|h_i^(l)⟩ for l < N_i and −⟨h_j^(l−N_i)|K_k|h_j^(l−N_i)⟩ otherwise.
pub fn build_a_matrix<T: Real>(
    spectrum: &HamiltonianSpectrum<T>,
    errs: &ErrorStructure<T>,
    i: usize,
    j: usize,
) -> Result<AMatrix<T>> {
    if i == j {
        return Err(Error::SameGroup(i));
    }
    let n = spectrum.len();
    for g in [i, j] {
        if g >= n {
            return Err(Error::InvalidInput(format!(
                "group index {g} out of range ({n} distinct eigenvalues)"
            )));
        }
    }
    if spectrum.dim() != errs.dim() {
        return Err(Error::DimensionMismatch {
            context: "spectrum vs error operators",
            expected: spectrum.dim(),
            found: errs.dim(),
        });
    }
    let gi = spectrum.group(i);
    let gj = spectrum.group(j);
    let cols = gi.len() + gj.len();
    let products = errs.products();
    let mut entries = Operator::zeros(products.len(), cols);
    for (k, prod) in products.iter().enumerate() {
        for (l, v) in gi.iter().enumerate() {
            entries[(k, l)] = prod.op.expectation(v);
        }
        for (l, v) in gj.iter().enumerate() {
            entries[(k, gi.len() + l)] = -prod.op.expectation(v);
        }
    }
    Ok(AMatrix {
        entries,
        pair: (i, j),
        split: gi.len(),
    })
}

/// Outcome of the feasibility problem Re(A)p = Im(A)p = 0, block sums 1, p >= 0.
#[derive(Clone, Debug)]
pub struct LpFeasibility<T> {
    pub p: Option<(Vec<T>, Vec<T>)>,
    /// Constraint residual of the returned p (unscaled rows).
    pub residual: f64,
    pub condition_estimate: f64,
    pub ill_conditioned: bool,
    /// Equality rows after pruning and deduplication, including the two block-sum rows.
    pub constraint_rows: usize,
    /// The floating-point solve failed its post-check and the exact rational solve was used.
    pub exact_fallback: bool,
}

impl<T> LpFeasibility<T> {
    pub fn is_feasible(&self) -> bool {
        self.p.is_some()
    }
}

/// Pruned, row-scaled and deduplicated equality system `M p = rhs` for an A-matrix.
pub fn constraint_system<T: Real>(a: &AMatrix<T>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let cols = a.cols();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for r in 0..a.rows() {
        let row = a.entries.row(r);
        for part in [0, 1] {
            let v: Vec<f64> = row
                .iter()
                .map(|z| if part == 0 { z.re.as_f64() } else { z.im.as_f64() })
                .collect();
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if scale < ZERO_ROW {
                continue;
            }
            let mut v: Vec<f64> = v.iter().map(|x| x / scale).collect();
            // a row and its negation describe the same equality
            if let Some(first) = v.iter().find(|x| x.abs() > ZERO_ROW) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            if !rows
                .iter()
                .any(|w| w.iter().zip(&v).all(|(x, y)| (x - y).abs() < ZERO_ROW))
            {
                rows.push(v);
            }
        }
    }
    let mut rhs = vec![0.0; rows.len()];
    let split = a.split();
    rows.push((0..cols).map(|c| if c < split { 1.0 } else { 0.0 }).collect());
    rows.push((0..cols).map(|c| if c < split { 0.0 } else { 1.0 }).collect());
    rhs.extend([1.0, 1.0]);
    (rows, rhs)
}

/// σ_max / σ_min over the numerically nonzero singular values of the scaled system.
fn condition_estimate(rows: &[Vec<f64>]) -> f64 {
    let n = rows.first().map_or(0, Vec::len);
    if n == 0 {
        return 1.0;
    }
    let gram = Operator::from_fn(n, n, |a, b| {
        creal(rows.iter().map(|r| r[a] * r[b]).sum::<f64>())
    });
    let ev = match hermitian_eigenvalues(&gram) {
        Ok(v) => v,
        Err(_) => return f64::INFINITY,
    };
    let smax = ev.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    if smax == 0.0 {
        return 1.0;
    }
    let cutoff = smax * f64::EPSILON * (rows.len().max(n) as f64);
    let smin = ev
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .filter(|s| *s > cutoff)
        .fold(f64::INFINITY, f64::min);
    smax / smin
}

fn split_and_clip<T: Real>(x: &[f64], split: usize) -> Option<(Vec<T>, Vec<T>)> {
    let mut out = Vec::with_capacity(x.len());
    for &v in x {
        if v < -CLIP {
            return None;
        }
        out.push(T::lit(v.max(0.0)));
    }
    let pj = out.split_off(split);
    Some((out, pj))
}

/// Solves the feasibility LP; returns a probability-vector pair when one exists.
pub fn lp_feasible<T: Real>(a: &AMatrix<T>) -> LpFeasibility<T> {
    let (rows, rhs) = constraint_system(a);
    let condition = condition_estimate(&rows[..rows.len() - 2]);
    let ill = condition > ILL_CONDITIONED;
    let n_rows = rows.len();
    let split = a.split();

    let accept = |x: &[f64]| -> Option<(Vec<T>, Vec<T>, f64)> {
        let (pi, pj) = split_and_clip::<T>(x, split)?;
        let res = a.constraint_residual(&pi, &pj).as_f64();
        let si: f64 = pi.iter().map(|v| v.as_f64()).sum();
        let sj: f64 = pj.iter().map(|v| v.as_f64()).sum();
        if res < LP_RESIDUAL_TOL && (si - 1.0).abs() < SUM_TOL && (sj - 1.0).abs() < SUM_TOL {
            Some((pi, pj, res))
        } else {
            None
        }
    };

    let float = solve_standard_form(&rows, &rhs, None);
    if float.status == LpStatus::Optimal {
        if let Some((pi, pj, res)) = float.x.as_deref().and_then(accept) {
            return LpFeasibility {
                p: Some((pi, pj)),
                residual: res,
                condition_estimate: condition,
                ill_conditioned: ill,
                constraint_rows: n_rows,
                exact_fallback: false,
            };
        }
    }
    if float.status == LpStatus::Infeasible && float.infeasibility > 1e-6 {
        return LpFeasibility {
            p: None,
            residual: f64::NAN,
            condition_estimate: condition,
            ill_conditioned: ill,
            constraint_rows: n_rows,
            exact_fallback: false,
        };
    }

    // Marginal or failed post-check: re-solve the same scaled system exactly.
    let exact = exact_feasible(&rows, &rhs);
    let p = exact.as_deref().and_then(accept);
    LpFeasibility {
        residual: p.as_ref().map_or(f64::NAN, |x| x.2),
        p: p.map(|(pi, pj, _)| (pi, pj)),
        condition_estimate: condition,
        ill_conditioned: ill,
        constraint_rows: n_rows,
        exact_fallback: true,
    }
}

/// Exact rational feasibility of `M x = rhs, x >= 0`, with every float converted exactly.
pub fn exact_feasible(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let to_q = |x: f64| BigRational::from_float(x).unwrap_or_else(BigRational::zero);
    let qa: Vec<Vec<BigRational>> = rows.iter().map(|r| r.iter().map(|&x| to_q(x)).collect()).collect();
    let qb: Vec<BigRational> = rhs.iter().map(|&x| to_q(x)).collect();
    let sol = solve_standard_form(&qa, &qb, None);
    sol.x
        .map(|x| x.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect())
}

/// Two codewords with the eigenvalue pair and probability vectors that produced them.
#[derive(Clone, Debug, Serialize)]
pub struct CodePair<T> {
    /// Group indices (i, j), absent for explicitly supplied codewords.
    pub pair: Option<(usize, usize)>,
    pub p_i: Vec<T>,
    pub p_j: Vec<T>,
    pub mu0: Ket<T>,
    pub mu1: Ket<T>,
    pub h0: T,
    pub h1: T,
}

impl<T: Real> CodePair<T> {
    /// |μ₀⟩ = Σ √p_i[k] |h_i^(k)⟩, |μ₁⟩ = Σ √p_j[k] |h_j^(k)⟩.
    pub fn from_probabilities(
        spectrum: &HamiltonianSpectrum<T>,
        i: usize,
        j: usize,
        p_i: Vec<T>,
        p_j: Vec<T>,
    ) -> Result<Self> {
        if i == j {
            return Err(Error::SameGroup(i));
        }
        let build = |g: usize, p: &[T]| -> Result<Ket<T>> {
            let group = spectrum.group(g);
            if group.len() != p.len() {
                return Err(Error::DimensionMismatch {
                    context: "probability vector length",
                    expected: group.len(),
                    found: p.len(),
                });
            }
            let mut k = Ket::zeros(spectrum.dim());
            for (v, &x) in group.iter().zip(p) {
                if x < T::zero() {
                    return Err(Error::InvalidInput(format!("negative probability {x}")));
                }
                k.axpy(creal(x.sqrt()), v);
            }
            let total: T = p.iter().copied().sum();
            if (total - T::one()).abs() > T::lit(SUM_TOL) {
                return Err(Error::InvalidInput(format!(
                    "probabilities sum to {total}, expected 1"
                )));
            }
            Ok(k)
        };
        let mu0 = build(i, &p_i)?;
        let mu1 = build(j, &p_j)?;
        Ok(CodePair {
            pair: Some((i, j)),
            p_i,
            p_j,
            mu0,
            mu1,
            h0: spectrum.eigenvalues()[i],
            h1: spectrum.eigenvalues()[j],
        })
    }

    /// Explicit codewords; h_α = ⟨μ_α|H|μ_α⟩.
    pub fn explicit(mu0: Ket<T>, mu1: Ket<T>, h: &Operator<T>) -> Result<Self> {
        if mu0.dim() != h.rows() || mu1.dim() != h.rows() {
            return Err(Error::DimensionMismatch {
                context: "codeword dimension",
                expected: h.rows(),
                found: mu0.dim().max(mu1.dim()),
            });
        }
        let tol = T::lit(KL_TOL);
        for (name, m) in [("mu0", &mu0), ("mu1", &mu1)] {
            if (m.norm() - T::one()).abs() > tol {
                return Err(Error::InvalidInput(format!("codeword {name} is not normalized")));
            }
        }
        if mu0.inner(&mu1).norm() > tol {
            return Err(Error::InvalidInput("codewords are not orthogonal".into()));
        }
        Ok(CodePair {
            pair: None,
            p_i: vec![T::one()],
            p_j: vec![T::one()],
            h0: h.expectation(&mu0).re,
            h1: h.expectation(&mu1).re,
            mu0,
            mu1,
        })
    }

    pub fn logical_gap(&self) -> T {
        self.h0 - self.h1
    }

    pub fn dim(&self) -> usize {
        self.mu0.dim()
    }

    pub fn codewords(&self) -> [&Ket<T>; 2] {
        [&self.mu0, &self.mu1]
    }

    /// (|μ₀⟩ + |μ₁⟩)/√2
    pub fn code_plus(&self) -> Ket<T> {
        self.mu0.add(&self.mu1).scaled(creal(T::FRAC_1_SQRT_2()))
    }

    /// Π_C
    pub fn projector(&self) -> Operator<T> {
        Operator::projector(&[self.mu0.clone(), self.mu1.clone()], self.dim())
    }

    /// H₀ = Π_C H Π_C
    pub fn logical_hamiltonian(&self, h: &Operator<T>) -> Operator<T> {
        let p = self.projector();
        p.matmul(h).matmul(&p)
    }

    /// max_α ‖H|μ_α⟩ − h_α|μ_α⟩‖
    pub fn eigen_residual(&self, h: &Operator<T>) -> T {
        let r0 = h.apply(&self.mu0).sub(&self.mu0.scaled(creal(self.h0))).norm();
        let r1 = h.apply(&self.mu1).sub(&self.mu1.scaled(creal(self.h1))).norm();
        r0.max(r1)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairAttempt {
    pub i: usize,
    pub j: usize,
    pub h_i: f64,
    pub h_j: f64,
    pub gap: f64,
    pub feasible: bool,
    pub constraint_rows: usize,
    pub condition_estimate: f64,
    pub ill_conditioned: bool,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome<T> {
    pub code: Option<CodePair<T>>,
    /// Pairs in the order tried, ending at the first feasible one.
    pub attempts: Vec<PairAttempt>,
}

/// Pairs i < j ordered by descending |h_i − h_j|, ties by ascending (i, j).
pub fn pair_order<T: Real>(eigenvalues: &[T]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..eigenvalues.len() {
        for j in i + 1..eigenvalues.len() {
            pairs.push((i, j, (eigenvalues[i] - eigenvalues[j]).abs().as_f64()));
        }
    }
    pairs.sort_by(|a, b| {
        let tie = GAP_TIE * a.2.abs().max(b.2.abs()).max(1.0);
        if (a.2 - b.2).abs() <= tie {
            (a.0, a.1).cmp(&(b.0, b.1))
        } else {
            b.2.partial_cmp(&a.2).unwrap_or(Ordering::Equal)
        }
    });
    pairs.into_iter().map(|(i, j, _)| (i, j)).collect()
}

/// Tries eigenvalue pairs in descending-gap order and returns the first feasible code.
///
/// Pairs are solved concurrently; the result is the first feasible pair in
/// the deterministic order regardless of completion order.
pub fn search_code<T: Real>(
    spectrum: &HamiltonianSpectrum<T>,
    errs: &ErrorStructure<T>,
) -> Result<SearchOutcome<T>> {
    if spectrum.len() < 2 {
        return Err(Error::InvalidInput(
            "code search needs at least two distinct eigenvalues".into(),
        ));
    }
    let order = pair_order(spectrum.eigenvalues());
    let solved: Vec<(PairAttempt, Option<(Vec<T>, Vec<T>)>)> = order
        .par_iter()
        .map(|&(i, j)| {
            let a = build_a_matrix(spectrum, errs, i, j)?;
            let f = lp_feasible(&a);
            let h = spectrum.eigenvalues();
            let attempt = PairAttempt {
                i,
                j,
                h_i: h[i].as_f64(),
                h_j: h[j].as_f64(),
                gap: (h[i] - h[j]).abs().as_f64(),
                feasible: f.is_feasible(),
                constraint_rows: f.constraint_rows,
                condition_estimate: f.condition_estimate,
                ill_conditioned: f.ill_conditioned,
            };
            Ok((attempt, f.p))
        })
        .collect::<Result<_>>()?;

    let mut attempts = Vec::new();
    for (attempt, p) in solved {
        let (i, j) = (attempt.i, attempt.j);
        attempts.push(attempt);
        if let Some((pi, pj)) = p {
            let code = CodePair::from_probabilities(spectrum, i, j, pi, pj)?;
            return Ok(SearchOutcome {
                code: Some(code),
                attempts,
            });
        }
    }
    Ok(SearchOutcome {
        code: None,
        attempts,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct KlReport<T> {
    pub satisfied: bool,
    /// σ_k = ⟨μ₀|K_k|μ₀⟩ in K^[~c] order.
    pub sigma: Vec<Cplx<T>>,
    pub max_offdiag: T,
    pub max_diag_gap: T,
}

pub fn check_knill_laflamme<T: Real>(code: &CodePair<T>, errs: &ErrorStructure<T>) -> KlReport<T> {
    let mut sigma = Vec::with_capacity(errs.products().len());
    let mut max_offdiag = T::zero();
    let mut max_diag_gap = T::zero();
    for k in errs.product_ops() {
        let k0 = k.apply(&code.mu0);
        let k1 = k.apply(&code.mu1);
        let s00 = code.mu0.inner(&k0);
        let s11 = code.mu1.inner(&k1);
        let s01 = code.mu0.inner(&k1);
        let s10 = code.mu1.inner(&k0);
        max_offdiag = max_offdiag.max(s01.norm()).max(s10.norm());
        max_diag_gap = max_diag_gap.max((s00 - s11).norm());
        sigma.push(s00);
    }
    let tol = T::lit(KL_TOL);
    KlReport {
        satisfied: max_offdiag < tol && max_diag_gap < tol,
        sigma,
        max_offdiag,
        max_diag_gap,
    }
}

#[derive(Clone, Debug)]
pub struct HnlsReport<T> {
    pub satisfied: bool,
    /// ‖H_⊥‖_F
    pub perp_norm: T,
    pub parallel_norm: T,
    /// Component of H Hilbert–Schmidt orthogonal to span{K^[~1]}.
    pub perp: Operator<T>,
}

/// Hilbert–Schmidt projection of H onto span{K^[~1]}; HNLS holds iff ‖H_⊥‖_F > 1e-8.
pub fn check_hnls<T: Real>(h: &Operator<T>, errs: &ErrorStructure<T>) -> Result<HnlsReport<T>> {
    if h.rows() != errs.dim() {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian vs error operators",
            expected: errs.dim(),
            found: h.rows(),
        });
    }
    let first;
    let k1 = if errs.order() > 1 {
        first = errs.truncated(1);
        &first
    } else {
        errs
    };
    // orthonormal basis of span{K} by modified Gram–Schmidt with reorthogonalization
    let mut basis: Vec<Operator<T>> = Vec::new();
    let drop = T::lit(1e-10);
    for k in k1.product_ops() {
        let scale = k.frobenius_norm();
        if scale <= T::min_positive_value() {
            continue;
        }
        let mut v = k.scaled_real(T::one() / scale);
        for _ in 0..2 {
            for b in &basis {
                let c = b.hs_inner(&v);
                v.axpy(-c, b);
            }
        }
        let norm = v.frobenius_norm();
        if norm > drop {
            basis.push(v.scaled_real(T::one() / norm));
        }
    }
    let mut parallel = Operator::zeros(h.rows(), h.cols());
    for b in &basis {
        parallel.axpy(b.hs_inner(h), b);
    }
    let perp = h - &parallel;
    let perp_norm = perp.frobenius_norm();
    Ok(HnlsReport {
        satisfied: perp_norm > T::lit(HNLS_TOL),
        perp_norm,
        parallel_norm: parallel.frobenius_norm(),
        perp,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    /// [H, E] = 0 for every E in E^[~c].
    pub p1: bool,
    /// [Π^[n], H] = 0 for n = 0..=c.
    pub p2: bool,
    pub max_error_commutator: f64,
    pub max_projector_commutator: f64,
}

pub fn check_p1_p2<T: Real>(
    h: &Operator<T>,
    basis: &CorrectableBasis<T>,
    errs: &ErrorStructure<T>,
) -> PropertyReport {
    let c = basis.order().min(errs.order());
    let mut max_e = T::zero();
    for level in &errs.levels()[..=c] {
        for e in level {
            max_e = max_e.max(h.commutator(e).max_abs());
        }
    }
    let mut max_p = T::zero();
    for n in 0..=basis.order() {
        let p = basis.order_projector(n);
        max_p = max_p.max(p.commutator(h).max_abs());
    }
    let tol = T::lit(P_TOL);
    PropertyReport {
        p1: max_e < tol,
        p2: max_p < tol,
        max_error_commutator: max_e.as_f64(),
        max_projector_commutator: max_p.as_f64(),
    }
}
