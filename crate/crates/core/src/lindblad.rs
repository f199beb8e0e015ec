//! Master-equation dynamics: dρ/dt = −iw[H,ρ] + κ Σ D[L]ρ + Rκ Σ D[L_E]ρ.

use std::fmt::Write as _;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::engine::AutoQecScheme;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigendecomposition, hermitian_eigenvalues, Ket, LowRankOperator, Operator};
use crate::noise::NoiseModel;
use crate::scalar::{creal, Cplx, Real};

pub const TRACE_ABORT: f64 = 1e-6;
pub const POSITIVITY_ABORT: f64 = 1e-6;
pub const DEFAULT_RECORD_EVERY: usize = 100;

/// D[A]ρ = AρA† − ½{A†A, ρ}
pub fn dissipator<T: Real>(a: &Operator<T>, rho: &Operator<T>) -> Result<Operator<T>> {
    if !a.is_square() || !rho.is_square() || a.rows() != rho.rows() {
        return Err(Error::DimensionMismatch {
            context: "dissipator operands",
            expected: rho.rows(),
            found: a.rows(),
        });
    }
    let ad = a.adjoint();
    let mut out = a.matmul(rho).matmul(&ad);
    out.axpy(creal(T::lit(-0.5)), &ad.matmul(a).anticommutator(rho));
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationConfig<T> {
    pub w: T,
    pub kappa: T,
    pub r: T,
    pub t_max: T,
    /// Fixed RK4 step; `None` selects the default stiffness-based step.
    pub dt: Option<T>,
    pub record_every: usize,
    pub enforce_hermiticity: bool,
}

impl<T: Real> SimulationConfig<T> {
    pub fn new(w: T, kappa: T, r: T, t_max: T) -> Self {
        SimulationConfig {
            w,
            kappa,
            r,
            t_max,
            dt: None,
            record_every: DEFAULT_RECORD_EVERY,
            enforce_hermiticity: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > T::zero()) {
                return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
            }
        }
        if !(self.t_max >= T::zero()) {
            return Err(Error::InvalidInput(format!("t_max must be >= 0, got {}", self.t_max)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be >= 1".into()));
        }
        if !(self.kappa >= T::zero()) || !(self.r >= T::zero()) {
            return Err(Error::InvalidInput("kappa and R must be >= 0".into()));
        }
        Ok(())
    }
}

/// min(1e-3, 0.02 / (Rκ + |w|·‖H‖_max + κ·Σ‖L†L‖_max))
pub fn default_dt<T: Real>(
    h: &Operator<T>,
    model: &NoiseModel<T>,
    scheme: Option<&AutoQecScheme<T>>,
    cfg: &SimulationConfig<T>,
) -> T {
    let engineered = if scheme.is_some() { cfg.r * cfg.kappa } else { T::zero() };
    let natural: T = model
        .lindblad_ops()
        .iter()
        .map(|l| l.adjoint().matmul(l).max_abs())
        .sum::<T>()
        * cfg.kappa;
    let scale = engineered + cfg.w.abs() * h.max_abs() + natural;
    let cap = T::lit(1e-3);
    if scale > T::zero() {
        cap.min(T::lit(0.02) / scale)
    } else {
        cap
    }
}

#[derive(Clone, Debug)]
enum Jump<T> {
    /// One nonzero per row: (LρL†)_ij = v_i ρ_{p(i),p(j)} conj(v_j).
    Monomial { cols: Vec<usize>, vals: Vec<Cplx<T>> },
    Dense { op: Operator<T>, adj: Operator<T> },
    /// A family Σ_K KρK† whose ranges lie in span{u_s}: Σ_ss' Tr(ρ Q_ss') |u_s⟩⟨u_s'|.
    Collected { targets: Vec<Ket<T>>, q: Vec<Operator<T>> },
}

fn as_monomial<T: Real>(l: &Operator<T>) -> Option<Jump<T>> {
    let n = l.rows();
    let mut cols = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let nz: Vec<usize> = (0..n).filter(|&j| !l[(i, j)].is_zero()).collect();
        match nz.as_slice() {
            [] => {
                cols.push(0);
                vals.push(Cplx::zero());
            }
            [j] => {
                cols.push(*j);
                vals.push(l[(i, *j)]);
            }
            _ => return None,
        }
    }
    Some(Jump::Monomial { cols, vals })
}

fn collect_family<T: Real>(ops: &[&LowRankOperator<T>], dim: usize) -> Jump<T> {
    // orthonormal basis of all target vectors
    let mut targets: Vec<Ket<T>> = Vec::new();
    for op in ops {
        for (a, _) in op.terms() {
            let mut v = a.clone();
            for _ in 0..2 {
                for u in &targets {
                    let c = u.inner(&v);
                    v.axpy(-c, u);
                }
            }
            let n = v.norm();
            if n > T::lit(1e-10) {
                targets.push(v.scaled(creal(T::one() / n)));
            }
        }
    }
    let m = targets.len();
    let mut q = vec![Operator::zeros(dim, dim); m * m];
    for op in ops {
        // K = Σ_s |u_s⟩⟨w_s| with |w_s⟩ = Σ_t conj(⟨u_s|a_t⟩) |b_t⟩
        let ws: Vec<Ket<T>> = targets
            .iter()
            .map(|u| {
                let mut w = Ket::zeros(dim);
                for (a, b) in op.terms() {
                    w.axpy(u.inner(a).conj(), b);
                }
                w
            })
            .collect();
        for s in 0..m {
            for s2 in 0..m {
                // ⟨w_s|ρ|w_s'⟩ = Tr(ρ |w_s'⟩⟨w_s|)
                q[s * m + s2].add_outer(Cplx::one(), &ws[s2], &ws[s]);
            }
        }
    }
    Jump::Collected { targets, q }
}

/// M = diag + Σ c_k |v_k⟩⟨v_k| + dense, so that Mρ costs O(d²) when the dense part is absent.
#[derive(Clone, Debug)]
struct Structured<T> {
    diag: Vec<Cplx<T>>,
    low: Vec<(Cplx<T>, Ket<T>)>,
    dense: Option<Operator<T>>,
}

impl<T: Real> Structured<T> {
    fn add_dense(&mut self, factor: Cplx<T>, op: &Operator<T>) {
        match &mut self.dense {
            Some(m) => m.axpy(factor, op),
            None => self.dense = Some(op.scaled(factor)),
        }
    }

    /// Adds factor·A for Hermitian A, as a shifted low-rank eigen-expansion when
    /// one eigenvalue covers at least three quarters of the spectrum.
    fn add_hermitian(&mut self, factor: Cplx<T>, a: &Operator<T>) -> Result<()> {
        let d = a.rows();
        if a.is_diagonal() {
            for (x, z) in self.diag.iter_mut().zip(a.diagonal()) {
                *x = *x + factor * z;
            }
            return Ok(());
        }
        let eig = hermitian_eigendecomposition(a)?;
        let tol = T::lit(1e-12) * T::one().max(a.max_abs());
        let mut best = (0usize, T::zero());
        for &lam in &eig.values {
            let count = eig.values.iter().filter(|&&x| (x - lam).abs() <= tol).count();
            if count > best.0 {
                best = (count, lam);
            }
        }
        let (mult, beta) = best;
        if 4 * (d - mult) > d {
            self.add_dense(factor, a);
            return Ok(());
        }
        for x in self.diag.iter_mut() {
            *x = *x + factor * beta;
        }
        for (v, &lam) in eig.vectors.iter().zip(&eig.values) {
            if (lam - beta).abs() > tol {
                self.low.push((factor * (lam - beta), v.clone()));
            }
        }
        Ok(())
    }

    fn left_mul(&self, rho: &Operator<T>) -> Operator<T> {
        let d = rho.rows();
        let mut x = match &self.dense {
            Some(m) => m.matmul(rho),
            None => Operator::zeros(d, d),
        };
        for i in 0..d {
            let di = self.diag[i];
            if di.is_zero() {
                continue;
            }
            for j in 0..d {
                x[(i, j)] = x[(i, j)] + di * rho[(i, j)];
            }
        }
        for (c, v) in &self.low {
            // c |v⟩ (⟨v|ρ)
            let mut row = vec![Cplx::zero(); d];
            for (a, va) in v.amplitudes().iter().enumerate() {
                let va = va.conj();
                if va.is_zero() {
                    continue;
                }
                for (r, z) in row.iter_mut().zip(rho.row(a)) {
                    *r = *r + va * *z;
                }
            }
            for (i, vi) in v.amplitudes().iter().enumerate() {
                let f = *c * *vi;
                if f.is_zero() {
                    continue;
                }
                for (j, r) in row.iter().enumerate() {
                    x[(i, j)] = x[(i, j)] + f * *r;
                }
            }
        }
        x
    }

    fn to_operator(&self) -> Operator<T> {
        let mut m = self.dense.clone().unwrap_or_else(|| Operator::zeros(self.diag.len(), self.diag.len()));
        for (i, z) in self.diag.iter().enumerate() {
            m[(i, i)] = m[(i, i)] + *z;
        }
        for (c, v) in &self.low {
            m.add_outer(*c, v, v);
        }
        m
    }
}

/// Precomputed generator: H_eff = wH − (i/2)(κ Σ L†L + Rκ Σ L_E†L_E) plus jump terms.
#[derive(Clone, Debug)]
pub struct Lindbladian<T> {
    h_eff: Structured<T>,
    jumps: Vec<(T, Jump<T>)>,
    dim: usize,
}

impl<T: Real> Lindbladian<T> {
    pub fn new(
        h: &Operator<T>,
        model: &NoiseModel<T>,
        scheme: Option<&AutoQecScheme<T>>,
        cfg: &SimulationConfig<T>,
    ) -> Result<Self> {
        let d = h.rows();
        if !h.is_square() || model.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "Hamiltonian vs noise dimension",
                expected: d,
                found: model.dim(),
            });
        }
        if let Some(s) = scheme {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    context: "Hamiltonian vs engineered dissipation",
                    expected: d,
                    found: s.dim(),
                });
            }
        }
        let mut h_eff = Structured {
            diag: vec![Cplx::zero(); d],
            low: Vec::new(),
            dense: None,
        };
        h_eff.add_hermitian(creal(cfg.w), h)?;
        // decay part Γ = ½(κ Σ L†L + Rκ Σ L_E†L_E), entering as −iΓ
        let mut gamma = Operator::zeros(d, d);
        let mut jumps = Vec::new();
        if cfg.kappa > T::zero() {
            for l in model.lindblad_ops() {
                if l.max_abs() == T::zero() {
                    continue;
                }
                let ll = l.adjoint().matmul(l);
                gamma.axpy(creal(T::lit(0.5) * cfg.kappa), &ll);
                let jump = as_monomial(l).unwrap_or_else(|| Jump::Dense {
                    op: l.clone(),
                    adj: l.adjoint(),
                });
                jumps.push((cfg.kappa, jump));
            }
        }
        let rate = cfg.r * cfg.kappa;
        if let Some(s) = scheme {
            if rate > T::zero() && !s.engineered_ops().is_empty() {
                let ops: Vec<&LowRankOperator<T>> = s.engineered_ops().iter().map(|o| &o.op).collect();
                let mut gram = Operator::zeros(d, d);
                for o in &ops {
                    gram.axpy(Cplx::one(), &o.gram());
                }
                gamma.axpy(creal(T::lit(0.5) * rate), &gram);
                jumps.push((rate, collect_family(&ops, d)));
            }
        }
        h_eff.add_hermitian(Cplx::new(T::zero(), -T::one()), &gamma.hermitian_part())?;
        Ok(Lindbladian { h_eff, jumps, dim: d })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effective_hamiltonian(&self) -> Operator<T> {
        self.h_eff.to_operator()
    }

    fn add_jumps(&self, rho: &Operator<T>, out: &mut Operator<T>) {
        let d = self.dim;
        for (rate, jump) in &self.jumps {
            let rate = *rate;
            match jump {
                Jump::Monomial { cols, vals } => {
                    for i in 0..d {
                        let vi = vals[i] * rate;
                        if vi.is_zero() {
                            continue;
                        }
                        let pi = cols[i];
                        for j in 0..d {
                            let vj = vals[j];
                            if vj.is_zero() {
                                continue;
                            }
                            out[(i, j)] = out[(i, j)] + vi * rho[(pi, cols[j])] * vj.conj();
                        }
                    }
                }
                Jump::Dense { op, adj } => {
                    out.axpy(creal(rate), &op.matmul(rho).matmul(adj));
                }
                Jump::Collected { targets, q } => {
                    let m = targets.len();
                    for s in 0..m {
                        for s2 in 0..m {
                            // Tr(ρ Q) = Σ_ab ρ_ab Q_ba
                            let qm = &q[s * m + s2];
                            let mut c = Cplx::zero();
                            for a in 0..d {
                                for b in 0..d {
                                    c = c + rho[(a, b)] * qm[(b, a)];
                                }
                            }
                            if !c.is_zero() {
                                out.add_outer(c * rate, &targets[s], &targets[s2]);
                            }
                        }
                    }
                }
            }
        }
    }

    /// L[ρ] for an arbitrary (not necessarily Hermitian) ρ.
    pub fn apply(&self, rho: &Operator<T>) -> Operator<T> {
        let mi = Cplx::new(T::zero(), -T::one());
        let x = self.h_eff.left_mul(rho);
        // ρ H_eff† = (H_eff ρ†)†
        let y = self.h_eff.left_mul(&rho.adjoint()).adjoint();
        let mut out = (x - y).scaled(mi);
        self.add_jumps(rho, &mut out);
        out
    }

    /// L[ρ] for Hermitian ρ, using (H_eff ρ)† = ρ H_eff†.
    pub fn apply_hermitian(&self, rho: &Operator<T>) -> Operator<T> {
        let d = self.dim;
        let x = self.h_eff.left_mul(rho);
        let mut out = Operator::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let z = x[(i, j)] - x[(j, i)].conj();
                // −i z
                out[(i, j)] = Cplx::new(z.im, -z.re);
            }
        }
        self.add_jumps(rho, &mut out);
        out
    }
}

/// Right-hand side of the master equation at ρ. The engineered term is dropped
/// when `scheme` is absent or R = 0.
pub fn rhs<T: Real>(
    rho: &Operator<T>,
    h: &Operator<T>,
    scheme: Option<&AutoQecScheme<T>>,
    model: &NoiseModel<T>,
    cfg: &SimulationConfig<T>,
) -> Result<Operator<T>> {
    if rho.rows() != h.rows() || !rho.is_square() {
        return Err(Error::DimensionMismatch {
            context: "density operator vs Hamiltonian",
            expected: h.rows(),
            found: rho.rows(),
        });
    }
    Ok(Lindbladian::new(h, model, scheme, cfg)?.apply(rho))
}

/// Dense d²×d² generator on row-major vec(ρ), assembled directly from
/// vec(AρB) = (A ⊗ Bᵀ) vec(ρ). Independent of the fast right-hand side.
pub fn superoperator_matrix<T: Real>(
    h: &Operator<T>,
    model: &NoiseModel<T>,
    scheme: Option<&AutoQecScheme<T>>,
    cfg: &SimulationConfig<T>,
) -> Operator<T> {
    let d = h.rows();
    let id = Operator::identity(d);
    let mi = Cplx::new(T::zero(), -T::one());
    let hw = h.scaled_real(cfg.w);
    let mut s = (hw.kron(&id) - id.kron(&hw.transpose())).scaled(mi);
    let mut add_dissipator = |l: &Operator<T>, rate: T| {
        let ll = l.adjoint().matmul(l);
        let mut part = l.kron(&l.conj());
        part.axpy(creal(T::lit(-0.5)), &ll.kron(&id));
        part.axpy(creal(T::lit(-0.5)), &id.kron(&ll.transpose()));
        s.axpy(creal(rate), &part);
    };
    for l in model.lindblad_ops() {
        add_dissipator(l, cfg.kappa);
    }
    if let Some(sch) = scheme {
        for o in sch.engineered_ops() {
            add_dissipator(&o.op.to_operator(), cfg.r * cfg.kappa);
        }
    }
    s
}

pub fn vectorize<T: Real>(rho: &Operator<T>) -> Ket<T> {
    Ket::from_amplitudes(rho.data().to_vec())
}

pub fn unvectorize<T: Real>(v: &Ket<T>, d: usize) -> Operator<T> {
    Operator::from_vec(d, d, v.amplitudes().to_vec()).expect("vector length is d²")
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SampleDiagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<Operator<T>>,
    pub diagnostics: Vec<SampleDiagnostics>,
    /// Step actually used (t_max divided by the step count).
    pub dt: T,
    pub steps: usize,
}

impl<T: Real> Trajectory<T> {
    pub fn final_state(&self) -> &Operator<T> {
        self.states.last().expect("trajectory has at least the initial sample")
    }

    /// CSV with `t,trace_err,min_eig`, optionally followed by re/im of every ρ entry.
    pub fn to_csv(&self, include_states: bool) -> String {
        let mut s = String::from("t,trace_err,min_eig");
        let d = self.states.first().map_or(0, Operator::rows);
        if include_states {
            for i in 0..d {
                for j in 0..d {
                    let _ = write!(s, ",re_{i}_{j},im_{i}_{j}");
                }
            }
        }
        s.push('\n');
        for ((t, rho), diag) in self.times.iter().zip(&self.states).zip(&self.diagnostics) {
            let _ = write!(
                s,
                "{},{},{}",
                fmt_sig(t.as_f64()),
                fmt_sig(diag.trace_error),
                fmt_sig(diag.min_eigenvalue)
            );
            if include_states {
                for z in rho.data() {
                    let _ = write!(s, ",{},{}", fmt_sig(z.re.as_f64()), fmt_sig(z.im.as_f64()));
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Twelve significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

fn diagnose<T: Real>(rho: &Operator<T>) -> Result<SampleDiagnostics> {
    let trace_error = (rho.trace() - Cplx::one()).norm().as_f64();
    let hermiticity_error = rho.hermiticity_error().as_f64();
    let min_eigenvalue = hermitian_eigenvalues(&rho.hermitian_part())?
        .last()
        .map_or(0.0, |v| v.as_f64());
    Ok(SampleDiagnostics {
        trace_error,
        hermiticity_error,
        min_eigenvalue,
    })
}

/// Number of RK4 steps and the effective step so that the run ends exactly at t_max.
pub fn step_plan<T: Real>(t_max: T, dt: T) -> (usize, T) {
    if t_max <= T::zero() {
        return (0, dt);
    }
    let raw = (t_max / dt).as_f64();
    let steps = (raw - 1e-9).ceil().max(1.0) as usize;
    (steps, t_max / T::lit(steps as f64))
}

/// Fixed-step classical RK4. Samples are recorded at t = 0, every `record_every`
/// steps, and at t_max. Aborts when the trace drifts by more than 1e-6 or a
/// sampled state has an eigenvalue below −1e-6.
pub fn integrate<T: Real>(
    rho0: &Operator<T>,
    h: &Operator<T>,
    scheme: Option<&AutoQecScheme<T>>,
    model: &NoiseModel<T>,
    cfg: &SimulationConfig<T>,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let gen = Lindbladian::new(h, model, scheme, cfg)?;
    let dt = cfg.dt.unwrap_or_else(|| default_dt(h, model, scheme, cfg));
    integrate_with(&gen, rho0, cfg.t_max, dt, cfg.record_every, cfg.enforce_hermiticity)
}

pub fn integrate_with<T: Real>(
    gen: &Lindbladian<T>,
    rho0: &Operator<T>,
    t_max: T,
    dt: T,
    record_every: usize,
    enforce_hermiticity: bool,
) -> Result<Trajectory<T>> {
    if rho0.rows() != gen.dim() || !rho0.is_square() {
        return Err(Error::DimensionMismatch {
            context: "initial state vs generator",
            expected: gen.dim(),
            found: rho0.rows(),
        });
    }
    let (steps, dt) = step_plan(t_max, dt);
    let half = creal(T::lit(0.5));
    let sixth = creal(T::one() / T::lit(6.0));
    let third = creal(T::one() / T::lit(3.0));
    let dtc = creal(dt);
    let record_every = record_every.max(1);

    let mut rho = rho0.clone();
    let first = diagnose(&rho)?;
    let mut traj = Trajectory {
        times: vec![T::zero()],
        states: vec![rho.clone()],
        diagnostics: vec![first],
        dt,
        steps,
    };
    let f = |r: &Operator<T>| {
        if enforce_hermiticity {
            gen.apply_hermitian(r)
        } else {
            gen.apply(r)
        }
    };
    for step in 1..=steps {
        let k1 = f(&rho);
        let mut tmp = rho.clone();
        tmp.axpy(dtc * half, &k1);
        let k2 = f(&tmp);
        let mut tmp = rho.clone();
        tmp.axpy(dtc * half, &k2);
        let k3 = f(&tmp);
        let mut tmp = rho.clone();
        tmp.axpy(dtc, &k3);
        let k4 = f(&tmp);
        rho.axpy(dtc * sixth, &k1);
        rho.axpy(dtc * third, &k2);
        rho.axpy(dtc * third, &k3);
        rho.axpy(dtc * sixth, &k4);
        if enforce_hermiticity {
            rho.hermitize_mut();
        }
        let t = dt * T::lit(step as f64);
        let trace_error = (rho.trace() - Cplx::one()).norm().as_f64();
        if !(trace_error <= TRACE_ABORT) {
            return Err(Error::IntegrationUnstable {
                time: t.as_f64(),
                trace_error,
                min_eigenvalue: f64::NAN,
            });
        }
        if step % record_every == 0 || step == steps {
            let diag = diagnose(&rho)?;
            if diag.min_eigenvalue < -POSITIVITY_ABORT {
                return Err(Error::IntegrationUnstable {
                    time: t.as_f64(),
                    trace_error: diag.trace_error,
                    min_eigenvalue: diag.min_eigenvalue,
                });
            }
            traj.times.push(t);
            traj.states.push(rho.clone());
            traj.diagnostics.push(diag);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, pauli_string, product_state};

    fn pure(k: &Ket<f64>) -> Operator<f64> {
        Operator::outer(k, k)
    }

    #[test]
    fn identity_dissipator_vanishes() {
        let rho = pure(&product_state("+").unwrap());
        assert!(dissipator(&Operator::identity(2), &rho).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn dephasing_flips_coherences() {
        // D[Z]|+⟩⟨+| = Z ρ Z − ρ = [[0, −1], [−1, 0]]
        let rho = pure(&product_state("+").unwrap());
        let z = pauli_string::<f64>("Z").unwrap();
        let out = dissipator(&z, &rho).unwrap();
        let expected = Operator::from_vec(
            2,
            2,
            vec![creal(0.0), creal(-1.0), creal(-1.0), creal(0.0)],
        )
        .unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-15);
        let zero = pure(&product_state("0").unwrap());
        assert!(dissipator(&z, &zero).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn fast_rhs_matches_dense_formula() {
        let h = pauli_string::<f64>("ZI").unwrap() + pauli_string("XX").unwrap();
        let model = NoiseModel::from_pauli_strings(&["XI", "ZZ", "YI"], 0.3).unwrap();
        let cfg = SimulationConfig::new(0.7, 0.3, 0.0, 1.0);
        let rho = pure(&product_state("+0").unwrap());
        let gen = Lindbladian::new(&h, &model, None, &cfg).unwrap();
        let mut expected = h.commutator(&rho).scaled(Cplx::new(0.0, -0.7));
        for l in model.lindblad_ops() {
            expected.axpy(creal(0.3), &dissipator(l, &rho).unwrap());
        }
        assert!(gen.apply(&rho).max_abs_diff(&expected) < 1e-14);
        assert!(gen.apply_hermitian(&rho).max_abs_diff(&expected) < 1e-14);
        let sup = superoperator_matrix(&h, &model, None, &cfg);
        let v = sup.apply(&vectorize(&rho));
        assert!(unvectorize(&v, 4).max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn unitary_ghz_evolution() {
        let h = pauli_string::<f64>("ZII").unwrap()
            + pauli_string("IZI").unwrap()
            + pauli_string("IIZ").unwrap();
        let mut ghz = Ket::zeros(8);
        ghz[0] = creal(std::f64::consts::FRAC_1_SQRT_2);
        ghz[7] = creal(std::f64::consts::FRAC_1_SQRT_2);
        let model = NoiseModel::noiseless(8);
        let mut cfg = SimulationConfig::new(1.0, 0.0, 0.0, 1.0);
        cfg.dt = Some(1e-3);
        let traj = integrate(&pure(&ghz), &h, None, &model, &cfg).unwrap();
        let u = expm(&h.scaled(Cplx::new(0.0, -1.0)));
        let psi = u.apply(&ghz);
        let fid = traj.final_state().expectation(&psi).re;
        assert!(fid > 1.0 - 1e-8, "fidelity {fid}");
        assert!((traj.times.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let h = pauli_string::<f64>("X").unwrap();
        let model = NoiseModel::from_pauli_strings(&["Z"], 0.5).unwrap();
        let rho0 = pure(&product_state("0").unwrap());
        let run = |dt: f64| {
            let mut cfg = SimulationConfig::new(2.0, 0.5, 0.0, 1.0);
            cfg.dt = Some(dt);
            integrate(&rho0, &h, None, &model, &cfg).unwrap().final_state().clone()
        };
        let e1 = run(0.04).max_abs_diff(&run(0.02));
        let e2 = run(0.02).max_abs_diff(&run(0.01));
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = SimulationConfig::new(1.0, 0.1, 0.0, 1.0);
        cfg.dt = Some(0.0);
        assert!(cfg.validate().is_err());
        cfg.dt = None;
        cfg.record_every = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unstable_step_aborts() {
        let h = pauli_string::<f64>("Z").unwrap();
        let model = NoiseModel::from_pauli_strings(&["X"], 10.0).unwrap();
        let mut cfg = SimulationConfig::new(1.0, 10.0, 0.0, 5.0);
        cfg.dt = Some(0.5);
        let err = integrate(&pure(&product_state("0").unwrap()), &h, None, &model, &cfg).unwrap_err();
        assert!(err.to_string().contains("integration unstable, reduce dt"));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let h = pauli_string::<f64>("Z").unwrap();
        let mut cfg = SimulationConfig::new(1.0, 0.0, 0.0, 0.1);
        cfg.dt = Some(0.01);
        cfg.record_every = 5;
        let traj = integrate(&pure(&product_state("+").unwrap()), &h, None, &NoiseModel::noiseless(2), &cfg).unwrap();
        let csv = traj.to_csv(false);
        assert!(csv.starts_with("t,trace_err,min_eig\n"));
        assert_eq!(csv.lines().count(), 1 + 3);
        assert!(traj.to_csv(true).lines().next().unwrap().ends_with("re_1_1,im_1_1"));
    }
}
