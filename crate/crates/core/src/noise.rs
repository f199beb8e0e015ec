//! Natural dissipation models and the recursive error sets they generate.

use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{matrix_sqrt_psd, pauli_string, Operator, RealMatrix};
use crate::scalar::{creal, Cplx, Real};

/// Tolerance for commutator and factorization checks.
pub const COMMUTE_TOL: f64 = 1e-10;
const FACTOR_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-12;

/// Lindblad operators sharing one rate κ.
#[derive(Clone, Debug)]
pub struct NoiseModel<T> {
    lindblad_ops: Vec<Operator<T>>,
    labels: Vec<String>,
    kappa: T,
    dim: usize,
    correlation: Option<RealMatrix<T>>,
    factor: Option<RealMatrix<T>>,
}

impl<T: Real> NoiseModel<T> {
    pub fn new(lindblad_ops: Vec<Operator<T>>, kappa: T, dim: usize) -> Result<Self> {
        let labels = (1..=lindblad_ops.len()).map(|i| format!("L{i}")).collect();
        Self::with_labels(lindblad_ops, labels, kappa, dim)
    }

    pub fn with_labels(
        lindblad_ops: Vec<Operator<T>>,
        labels: Vec<String>,
        kappa: T,
        dim: usize,
    ) -> Result<Self> {
        if !(kappa >= T::zero()) {
            return Err(Error::InvalidInput(format!("noise rate must be >= 0, got {kappa}")));
        }
        for op in &lindblad_ops {
            if op.rows() != dim || op.cols() != dim {
                return Err(Error::DimensionMismatch {
                    context: "Lindblad operator dimension",
                    expected: dim,
                    found: op.rows().max(op.cols()),
                });
            }
        }
        if labels.len() != lindblad_ops.len() {
            return Err(Error::DimensionMismatch {
                context: "Lindblad operator labels",
                expected: lindblad_ops.len(),
                found: labels.len(),
            });
        }
        Ok(NoiseModel {
            lindblad_ops,
            labels,
            kappa,
            dim,
            correlation: None,
            factor: None,
        })
    }

    /// No natural dissipation on a `dim`-dimensional space.
    pub fn noiseless(dim: usize) -> Self {
        NoiseModel {
            lindblad_ops: Vec::new(),
            labels: Vec::new(),
            kappa: T::zero(),
            dim,
            correlation: None,
            factor: None,
        }
    }

    /// L_i = Z_i on each of `n` qubits.
    pub fn local_dephasing(n: usize, kappa: T) -> Result<Self> {
        Self::local_pauli('Z', n, kappa)
    }

    /// L_i = X_i on each of `n` qubits.
    pub fn local_bitflip(n: usize, kappa: T) -> Result<Self> {
        Self::local_pauli('X', n, kappa)
    }

    fn local_pauli(label: char, n: usize, kappa: T) -> Result<Self> {
        let mut ops = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for q in 0..n {
            let s: String = (0..n).map(|k| if k == q { label } else { 'I' }).collect();
            ops.push(pauli_string(&s)?);
            labels.push(format!("{label}{}", q + 1));
        }
        Self::with_labels(ops, labels, kappa, 1 << n)
    }

    /// One Lindblad operator per Pauli string, all on the same register.
    pub fn from_pauli_strings(strings: &[&str], kappa: T) -> Result<Self> {
        let first = strings
            .first()
            .ok_or_else(|| Error::InvalidInput("empty Pauli-string noise list".into()))?;
        let n = first.chars().count();
        let mut ops = Vec::with_capacity(strings.len());
        for s in strings {
            if s.chars().count() != n {
                return Err(Error::DimensionMismatch {
                    context: "Pauli-string noise qubit count",
                    expected: n,
                    found: s.chars().count(),
                });
            }
            ops.push(pauli_string(s)?);
        }
        Self::with_labels(ops, strings.iter().map(|s| s.to_string()).collect(), kappa, 1 << n)
    }

    /// Correlated dephasing with L_i = Σ_j D_ij Z_j, where D is the symmetric PSD root of C.
    pub fn correlated_dephasing(c: &RealMatrix<T>, kappa: T) -> Result<Self> {
        let d = matrix_sqrt_psd(c)?;
        Self::dephasing_from_factor(c, d, kappa)
    }

    /// Correlated dephasing with a caller-supplied factor D, checked against DᵀD = C.
    pub fn correlated_dephasing_with_factor(
        c: &RealMatrix<T>,
        d: &RealMatrix<T>,
        kappa: T,
    ) -> Result<Self> {
        if d.cols() != c.rows() || c.rows() != c.cols() {
            return Err(Error::DimensionMismatch {
                context: "correlation factor columns",
                expected: c.rows(),
                found: d.cols(),
            });
        }
        let err = d.gram().max_abs_diff(c);
        if err > T::lit(FACTOR_TOL) {
            return Err(Error::InvalidInput(format!(
                "factor does not reproduce the correlation matrix (max |DᵀD − C| = {:e})",
                err.as_f64()
            )));
        }
        Self::dephasing_from_factor(c, d.clone(), kappa)
    }

    fn dephasing_from_factor(c: &RealMatrix<T>, d: RealMatrix<T>, kappa: T) -> Result<Self> {
        let n = c.rows();
        if n == 0 {
            return Err(Error::InvalidInput("correlation matrix must be at least 1x1".into()));
        }
        let zs: Vec<Operator<T>> = (0..n)
            .map(|q| {
                let s: String = (0..n).map(|k| if k == q { 'Z' } else { 'I' }).collect();
                pauli_string(&s)
            })
            .collect::<Result<_>>()?;
        let dim = 1usize << n;
        let mut ops = Vec::with_capacity(d.rows());
        for i in 0..d.rows() {
            let mut l = Operator::zeros(dim, dim);
            for (j, z) in zs.iter().enumerate() {
                if d[(i, j)] != T::zero() {
                    l.axpy(creal(d[(i, j)]), z);
                }
            }
            ops.push(l);
        }
        let labels = (1..=ops.len()).map(|i| format!("L{i}")).collect();
        let mut model = Self::with_labels(ops, labels, kappa, dim)?;
        model.correlation = Some(c.clone());
        model.factor = Some(d);
        Ok(model)
    }

    /// Appends `k` noiseless ancilla qubits as the least significant qubits.
    pub fn with_ancillas(&self, k: usize) -> Self {
        if k == 0 {
            return self.clone();
        }
        let id = Operator::identity(1 << k);
        NoiseModel {
            lindblad_ops: self.lindblad_ops.iter().map(|l| l.kron(&id)).collect(),
            labels: self.labels.clone(),
            kappa: self.kappa,
            dim: self.dim << k,
            correlation: self.correlation.clone(),
            factor: self.factor.clone(),
        }
    }

    pub fn with_kappa(&self, kappa: T) -> Self {
        let mut m = self.clone();
        m.kappa = kappa;
        m
    }

    pub fn lindblad_ops(&self) -> &[Operator<T>] {
        &self.lindblad_ops
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn correlation(&self) -> Option<&RealMatrix<T>> {
        self.correlation.as_ref()
    }

    pub fn factor(&self) -> Option<&RealMatrix<T>> {
        self.factor.as_ref()
    }

    /// True for operators that were produced from a correlation matrix.
    pub fn is_factorized(&self) -> bool {
        self.factor.is_some()
    }

    /// B = Σ L†L
    pub fn no_jump(&self) -> Operator<T> {
        let mut b = Operator::zeros(self.dim, self.dim);
        for l in &self.lindblad_ops {
            b.axpy(Cplx::one(), &l.adjoint().matmul(l));
        }
        b
    }

    /// Per-operator flag: ‖[H, L]‖_max < 1e-10.
    pub fn commutes_with_hamiltonian(&self, h: &Operator<T>) -> Result<Vec<bool>> {
        if h.rows() != self.dim || h.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "Hamiltonian vs noise dimension",
                expected: self.dim,
                found: h.rows(),
            });
        }
        Ok(self
            .lindblad_ops
            .iter()
            .map(|l| h.commutator(l).max_abs() < T::lit(COMMUTE_TOL))
            .collect())
    }
}

/// Position of an operator inside the flattened list E^[~c] (levels 0..=c in order).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ErrorIndex {
    pub level: usize,
    pub index: usize,
}

/// K = E_a† E_b together with the pair that produced it.
#[derive(Clone, Debug)]
pub struct ProductOperator<T> {
    pub op: Operator<T>,
    pub a: ErrorIndex,
    pub b: ErrorIndex,
}

#[derive(Clone, Debug)]
pub struct ErrorStructure<T> {
    levels: Vec<Vec<Operator<T>>>,
    no_jump: Operator<T>,
    products: Vec<ProductOperator<T>>,
    raw_product_count: usize,
}

impl<T: Real> ErrorStructure<T> {
    pub fn order(&self) -> usize {
        self.levels.len() - 1
    }

    /// E^[0..=c]
    pub fn levels(&self) -> &[Vec<Operator<T>>] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &[Operator<T>] {
        &self.levels[n]
    }

    pub fn no_jump(&self) -> &Operator<T> {
        &self.no_jump
    }

    /// Flattened E^[~c].
    pub fn errors(&self) -> impl Iterator<Item = (ErrorIndex, &Operator<T>)> {
        self.levels.iter().enumerate().flat_map(|(level, ops)| {
            ops.iter()
                .enumerate()
                .map(move |(index, op)| (ErrorIndex { level, index }, op))
        })
    }

    pub fn error_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn error(&self, idx: ErrorIndex) -> &Operator<T> {
        &self.levels[idx.level][idx.index]
    }

    /// K^[~c] after deduplication.
    pub fn products(&self) -> &[ProductOperator<T>] {
        &self.products
    }

    pub fn product_ops(&self) -> impl Iterator<Item = &Operator<T>> {
        self.products.iter().map(|p| &p.op)
    }

    /// |E^[~c]|², the product count before deduplication.
    pub fn raw_product_count(&self) -> usize {
        self.raw_product_count
    }

    pub fn dim(&self) -> usize {
        self.no_jump.rows()
    }

    /// Restriction to orders 0..=c.
    pub fn truncated(&self, c: usize) -> ErrorStructure<T> {
        let c = c.min(self.order());
        let levels = self.levels[..=c].to_vec();
        finish(levels, self.no_jump.clone())
    }
}

/// Builds E^[0..=c] by the recursion
/// E^[n] = {L_a E^[n-1]_l} ∪ {B E^[n-2]_l}, with E^[0] = {I} and E^[-1] empty,
/// then K^[~c] = {E_a† E_b}.
pub fn build_error_structure<T: Real>(model: &NoiseModel<T>, c: usize) -> Result<ErrorStructure<T>> {
    if c == 0 {
        return Err(Error::InvalidInput("error-correction order must be >= 1".into()));
    }
    let dim = model.dim();
    let b = model.no_jump();
    let mut levels: Vec<Vec<Operator<T>>> = vec![vec![Operator::identity(dim)]];
    for n in 1..=c {
        let mut next = Vec::new();
        for l in model.lindblad_ops() {
            for e in &levels[n - 1] {
                next.push(l.matmul(e));
            }
        }
        if n >= 2 {
            for e in &levels[n - 2] {
                next.push(b.matmul(e));
            }
        }
        levels.push(next);
    }
    Ok(finish(levels, b))
}

fn finish<T: Real>(levels: Vec<Vec<Operator<T>>>, no_jump: Operator<T>) -> ErrorStructure<T> {
    let flat: Vec<(ErrorIndex, &Operator<T>)> = levels
        .iter()
        .enumerate()
        .flat_map(|(level, ops)| {
            ops.iter()
                .enumerate()
                .map(move |(index, op)| (ErrorIndex { level, index }, op))
        })
        .collect();
    let adjoints: Vec<Operator<T>> = flat.iter().map(|(_, e)| e.adjoint()).collect();
    let mut products: Vec<ProductOperator<T>> = Vec::new();
    let mut normalized: Vec<Operator<T>> = Vec::new();
    for (ia, (a, _)) in flat.iter().enumerate() {
        for (b, eb) in &flat {
            let k = adjoints[ia].matmul(eb);
            let key = phase_normalized(&k);
            if normalized
                .iter()
                .any(|m| within(m, &key, T::lit(DEDUP_TOL)))
            {
                continue;
            }
            normalized.push(key);
            products.push(ProductOperator { op: k, a: *a, b: *b });
        }
    }
    ErrorStructure {
        raw_product_count: flat.len() * flat.len(),
        levels,
        no_jump,
        products,
    }
}

fn phase_normalized<T: Real>(m: &Operator<T>) -> Operator<T> {
    match m.data().iter().find(|z| z.norm() > T::lit(DEDUP_TOL)) {
        Some(z) => {
            let phase = z / creal(z.norm());
            m.scaled(phase.conj())
        }
        None => m.clone(),
    }
}

fn within<T: Real>(a: &Operator<T>, b: &Operator<T>, tol: T) -> bool {
    a.data()
        .iter()
        .zip(b.data())
        .all(|(x, y)| (x - y).norm() < tol)
}
