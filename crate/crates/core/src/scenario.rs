//! Scenario definitions, presets, and the end-to-end run pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::code_search::{
    check_hnls, check_knill_laflamme, check_p1_p2, search_code, CodePair, PairAttempt, PropertyReport,
};
use crate::engine::{
    build_correctable_basis, build_engineered_dissipation, verify_hamiltonian_block_form, AutoQecScheme,
    BlockFormReport,
};
use crate::error::{Error, Result};
use crate::linalg::{group_spectrum, pauli_string, product_state, Ket, Operator, RealMatrix, MAX_QUBITS};
use crate::lindblad::{integrate, SimulationConfig, Trajectory};
use crate::metrology::{
    data_processing_check, ideal_bound_check, ideal_qfi, pure_state, qfi_curve, scaling_experiment, CurveTable,
    Experiment, QfiCurve, QfiOptions, ScalingReport, CURVE_HEADER, DEFAULT_HORIZON, DEFAULT_SAMPLES,
};
use crate::noise::{build_error_structure, NoiseModel};

pub const SCHEMA_VERSION: &str = "autoqec/1";

/// A scalar or a list of values; both spellings are accepted in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Sweep<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Sweep::One(v) => vec![v.clone()],
            Sweep::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliTerm {
    pub coeff: f64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianSpec {
    /// Σ_i Z_i
    SumZ,
    /// Π_i Z_i
    ProductZ,
    Pauli(Vec<PauliTerm>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSpec {
    None,
    LocalDephasing,
    LocalBitflip,
    /// Row-major n×n correlation matrix C, optionally with an explicit m×n factor D (C = DᵀD).
    Correlated {
        matrix: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        factor: Option<Vec<f64>>,
    },
    /// One Lindblad operator per Pauli string over the system qubits.
    Paulis(Vec<String>),
}

/// Amplitude on a product state over {0, 1, +, -}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateTerm {
    pub state: String,
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn one() -> f64 {
    1.0
}

impl StateTerm {
    pub fn new(state: &str, re: f64) -> Self {
        StateTerm {
            state: state.into(),
            re,
            im: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CodeSpec {
    #[default]
    Search,
    /// Codewords given as superpositions; each is normalized on load.
    Explicit {
        mu0: Vec<StateTerm>,
        mu1: Vec<StateTerm>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeSpec {
    /// (|μ₀⟩ + |μ₁⟩)/√2
    #[default]
    CodePlus,
    Explicit(Vec<StateTerm>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    pub c: usize,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub n_qubits: usize,
    pub hamiltonian: HamiltonianSpec,
    pub noise: NoiseSpec,
    /// Noiseless ancillas appended as the least significant qubits.
    #[serde(default)]
    pub ancilla_qubits: usize,
    #[serde(default)]
    pub code: CodeSpec,
    pub c: Sweep<usize>,
    pub w: f64,
    pub kappa: f64,
    #[serde(rename = "R")]
    pub r: Sweep<f64>,
    #[serde(rename = "T", default = "default_horizon")]
    pub t: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dw: Option<f64>,
    #[serde(default)]
    pub probe: ProbeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn check(cond: bool, field: &str, message: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::config(field, message))
    }
}

fn build_state(terms: &[StateTerm], n: usize, field: &str) -> Result<Ket<f64>> {
    check(!terms.is_empty(), field, "at least one term is required")?;
    let mut k = Ket::zeros(1 << n);
    for (idx, t) in terms.iter().enumerate() {
        let f = format!("{field}[{idx}].state");
        check(
            t.state.chars().count() == n,
            &f,
            format!("expected {n} symbols, got '{}'", t.state),
        )?;
        let s = product_state::<f64>(&t.state).map_err(|e| Error::config(&f, e.to_string()))?;
        k.axpy(crate::scalar::cplx(t.re, t.im), &s);
    }
    k.normalized()
        .ok_or_else(|| Error::config(field, "state has zero norm"))
}

impl Scenario {
    pub fn total_qubits(&self) -> usize {
        self.n_qubits + self.ancilla_qubits
    }

    pub fn orders(&self) -> Vec<usize> {
        self.c.values()
    }

    pub fn r_values(&self) -> Vec<f64> {
        self.r.values()
    }

    /// Field-level validation; also builds every operator once to surface errors early.
    pub fn validate(&self) -> Result<()> {
        check(!self.name.is_empty(), "name", "must be non-empty")?;
        check(
            self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'),
            "name",
            "only ASCII letters, digits, '-' and '_' are allowed",
        )?;
        check(self.n_qubits >= 1, "n_qubits", "must be >= 1")?;
        check(
            self.total_qubits() <= MAX_QUBITS,
            "ancilla_qubits",
            format!("n_qubits + ancilla_qubits must be <= {MAX_QUBITS}"),
        )?;
        let orders = self.orders();
        check(!orders.is_empty(), "c", "at least one order is required")?;
        check(orders.iter().all(|&c| c >= 1), "c", "orders must be >= 1")?;
        let rs = self.r_values();
        check(!rs.is_empty(), "R", "at least one value is required")?;
        check(rs.iter().all(|r| r.is_finite() && *r >= 0.0), "R", "values must be finite and >= 0")?;
        check(self.w.is_finite(), "w", "must be finite")?;
        check(self.kappa.is_finite() && self.kappa >= 0.0, "kappa", "must be finite and >= 0")?;
        check(self.t.is_finite() && self.t > 0.0, "T", "must be finite and > 0")?;
        check(self.samples >= 1, "samples", "must be >= 1")?;
        if let Some(dt) = self.dt {
            check(dt.is_finite() && dt > 0.0, "dt", "must be finite and > 0")?;
        }
        if let Some(dw) = self.dw {
            check(dw.is_finite() && dw > 0.0, "dw", "must be finite and > 0")?;
        }
        if let Some(s) = &self.scaling {
            check(s.r.len() >= 2, "scaling.R", "at least two values are required")?;
            check(
                s.r.windows(2).all(|w| w[0] > 0.0 && (w[1] / w[0] - 2.0).abs() < 1e-9),
                "scaling.R",
                "values must be positive and each double the previous",
            )?;
            check(s.c >= 1, "scaling.c", "must be >= 1")?;
            if let Some(t) = s.t {
                check(t.is_finite() && t > 0.0, "scaling.T", "must be finite and > 0")?;
            }
        }
        self.hamiltonian_operator()?;
        self.noise_model()?;
        if let CodeSpec::Explicit { mu0, mu1 } = &self.code {
            let a = build_state(mu0, self.total_qubits(), "code.explicit.mu0")?;
            let b = build_state(mu1, self.total_qubits(), "code.explicit.mu1")?;
            let ov = a.inner(&b).norm();
            check(ov < 1e-9, "code.explicit", format!("codewords are not orthogonal (overlap {ov:.3e})"))?;
        }
        if let ProbeSpec::Explicit(terms) = &self.probe {
            build_state(terms, self.total_qubits(), "probe.explicit")?;
        }
        Ok(())
    }

    /// Signal Hamiltonian on the full register (identity on ancillas).
    pub fn hamiltonian_operator(&self) -> Result<Operator<f64>> {
        let n = self.n_qubits;
        let sys = match &self.hamiltonian {
            HamiltonianSpec::SumZ => {
                let mut h = Operator::zeros(1 << n, 1 << n);
                for q in 0..n {
                    h = h + crate::linalg::single_site('Z', q, n)?;
                }
                h
            }
            HamiltonianSpec::ProductZ => pauli_string(&"Z".repeat(n))?,
            HamiltonianSpec::Pauli(terms) => {
                check(!terms.is_empty(), "hamiltonian.pauli", "at least one term is required")?;
                let mut h = Operator::zeros(1 << n, 1 << n);
                for (i, t) in terms.iter().enumerate() {
                    let f = format!("hamiltonian.pauli[{i}].label");
                    check(t.label.len() == n, &f, format!("expected {n} labels, got '{}'", t.label))?;
                    let p = pauli_string::<f64>(&t.label).map_err(|e| Error::config(&f, e.to_string()))?;
                    h.axpy(crate::scalar::creal(t.coeff), &p);
                }
                h
            }
        };
        Ok(sys.kron(&Operator::identity(1 << self.ancilla_qubits)))
    }

    /// Natural noise on the system qubits, extended by identity on ancillas.
    pub fn noise_model(&self) -> Result<NoiseModel<f64>> {
        let n = self.n_qubits;
        let k = self.kappa;
        let sys = match &self.noise {
            NoiseSpec::None => NoiseModel::noiseless(1 << n),
            NoiseSpec::LocalDephasing => NoiseModel::local_dephasing(n, k)?,
            NoiseSpec::LocalBitflip => NoiseModel::local_bitflip(n, k)?,
            NoiseSpec::Correlated { matrix, factor } => {
                check(
                    matrix.len() == n * n,
                    "noise.correlated.matrix",
                    format!("expected {} entries ({n}x{n} row-major), got {}", n * n, matrix.len()),
                )?;
                let c = RealMatrix::from_row_major(n, n, matrix.clone())?;
                match factor {
                    None => NoiseModel::correlated_dephasing(&c, k)
                        .map_err(|e| Error::config("noise.correlated.matrix", e.to_string()))?,
                    Some(d) => {
                        check(
                            !d.is_empty() && d.len() % n == 0,
                            "noise.correlated.factor",
                            format!("length {} is not a multiple of {n}", d.len()),
                        )?;
                        let dm = RealMatrix::from_row_major(d.len() / n, n, d.clone())?;
                        NoiseModel::correlated_dephasing_with_factor(&c, &dm, k)
                            .map_err(|e| Error::config("noise.correlated.factor", e.to_string()))?
                    }
                }
            }
            NoiseSpec::Paulis(list) => {
                for (i, s) in list.iter().enumerate() {
                    check(
                        s.len() == n,
                        &format!("noise.paulis[{i}]"),
                        format!("expected {n} labels, got '{s}'"),
                    )?;
                }
                let refs: Vec<&str> = list.iter().map(String::as_str).collect();
                NoiseModel::from_pauli_strings(&refs, k).map_err(|e| Error::config("noise.paulis", e.to_string()))?
            }
        };
        Ok(if self.ancilla_qubits > 0 {
            sys.with_ancillas(self.ancilla_qubits)
        } else {
            sys
        })
    }

    pub fn explicit_code(&self, h: &Operator<f64>) -> Result<Option<CodePair<f64>>> {
        match &self.code {
            CodeSpec::Search => Ok(None),
            CodeSpec::Explicit { mu0, mu1 } => {
                let n = self.total_qubits();
                let a = build_state(mu0, n, "code.explicit.mu0")?;
                let b = build_state(mu1, n, "code.explicit.mu1")?;
                CodePair::explicit(a, b, h)
                    .map(Some)
                    .map_err(|e| Error::config("code.explicit", e.to_string()))
            }
        }
    }

    pub fn probe_state(&self, code: &CodePair<f64>) -> Result<Ket<f64>> {
        match &self.probe {
            ProbeSpec::CodePlus => Ok(code.code_plus()),
            ProbeSpec::Explicit(terms) => build_state(terms, self.total_qubits(), "probe.explicit"),
        }
    }
}

const FIELDS: &[&str] = &[
    "name",
    "description",
    "n_qubits",
    "hamiltonian",
    "noise",
    "ancilla_qubits",
    "code",
    "c",
    "w",
    "kappa",
    "R",
    "T",
    "samples",
    "dt",
    "dw",
    "probe",
    "scaling",
    "notes",
];

fn field_as<T: DeserializeOwned>(v: &Value, field: &str) -> Result<()> {
    serde_json::from_value::<T>(v.clone())
        .map(|_| ())
        .map_err(|e| Error::config(field, e.to_string()))
}

/// Re-checks each top-level field on its own so a parse failure names the field.
fn diagnose(v: &Value, err: serde_json::Error) -> Error {
    let Some(obj) = v.as_object() else {
        return Error::config("<root>", "expected a JSON object");
    };
    for (key, val) in obj {
        let res = match key.as_str() {
            "name" | "description" => field_as::<String>(val, key),
            "n_qubits" | "ancilla_qubits" | "samples" => field_as::<usize>(val, key),
            "hamiltonian" => field_as::<HamiltonianSpec>(val, key),
            "noise" => field_as::<NoiseSpec>(val, key),
            "code" => field_as::<CodeSpec>(val, key),
            "c" => field_as::<Sweep<usize>>(val, key),
            "w" | "kappa" | "T" => field_as::<f64>(val, key),
            "R" => field_as::<Sweep<f64>>(val, key),
            "dt" | "dw" => field_as::<Option<f64>>(val, key),
            "probe" => field_as::<ProbeSpec>(val, key),
            "scaling" => field_as::<Option<ScalingSpec>>(val, key),
            "notes" => field_as::<Vec<String>>(val, key),
            other => Err(Error::config(other, format!("unknown field; expected one of {FIELDS:?}"))),
        };
        if let Err(e) = res {
            return e;
        }
    }
    let msg = err.to_string();
    let field = msg
        .split('`')
        .nth(1)
        .filter(|f| FIELDS.contains(f))
        .unwrap_or("<root>")
        .to_string();
    Error::config(field, msg)
}

pub fn parse_config(text: &str) -> Result<Scenario> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::config("<root>", e.to_string()))?;
    let s: Scenario = serde_json::from_value(v.clone()).map_err(|e| diagnose(&v, e))?;
    s.validate()?;
    Ok(s)
}

pub fn load_config(path: &Path) -> Result<Scenario> {
    parse_config(&fs::read_to_string(path)?)
}

pub fn to_json(s: &Scenario) -> Result<String> {
    Ok(serde_json::to_string_pretty(s)?)
}

fn correlated_fig2() -> NoiseSpec {
    let (a, b) = (1.0 / 5f64.sqrt(), 1.0 / 2f64.sqrt());
    NoiseSpec::Correlated {
        matrix: vec![1.6, -0.4, -0.4, -0.4, 0.7, -0.5, -0.4, -0.5, 0.7],
        factor: Some(vec![2.0 * a, -a, 0.0, 0.0, b, -b, 2.0 * a, 0.0, -a]),
    }
}

fn ghz_like(n: usize, sign: f64) -> Vec<StateTerm> {
    vec![
        StateTerm::new(&"+".repeat(n), 1.0),
        StateTerm::new(&"-".repeat(n), sign),
    ]
}

fn base(name: &str, description: &str, n: usize, h: HamiltonianSpec, noise: NoiseSpec) -> Scenario {
    Scenario {
        name: name.into(),
        description: description.into(),
        n_qubits: n,
        hamiltonian: h,
        noise,
        ancilla_qubits: 0,
        code: CodeSpec::Search,
        c: Sweep::One(1),
        w: 1.0,
        kappa: 0.1,
        r: Sweep::Many(vec![100.0, 200.0, 400.0]),
        t: DEFAULT_HORIZON,
        samples: DEFAULT_SAMPLES,
        dt: None,
        dw: None,
        probe: ProbeSpec::CodePlus,
        scaling: None,
        notes: vec!["T = 5 is a chosen default horizon, not a value taken from a plotted time axis".into()],
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "fig2-correlated-dephasing",
    "fig3-repetition",
    "sm-s3b-sufficient",
    "sm-s3b-p1-violated",
    "sm-s3b-p2-violated",
    "sm-s3a-hnls-ok",
    "sm-s3a-hnls-violated",
    "sm-s4a-infeasible",
];

pub fn preset(name: &str) -> Result<Scenario> {
    let s = match name {
        "fig2-correlated-dephasing" => {
            let (p4, p3) = (0.4f64.sqrt(), 0.3f64.sqrt());
            Scenario {
                code: CodeSpec::Explicit {
                    mu0: vec![
                        StateTerm::new("100", p4),
                        StateTerm::new("010", p3),
                        StateTerm::new("001", p3),
                    ],
                    mu1: vec![
                        StateTerm::new("011", p4),
                        StateTerm::new("101", p3),
                        StateTerm::new("110", p3),
                    ],
                },
                scaling: Some(ScalingSpec {
                    r: vec![100.0, 200.0, 400.0],
                    c: 1,
                    t: None,
                }),
                ..base(
                    name,
                    "3-qubit sum-Z sensing under correlated dephasing; codewords from p = (0.4, 0.3, 0.3) on both blocks",
                    3,
                    HamiltonianSpec::SumZ,
                    correlated_fig2(),
                )
            }
        }
        "fig3-repetition" => Scenario {
            code: CodeSpec::Explicit {
                mu0: ghz_like(5, 1.0),
                mu1: ghz_like(5, -1.0),
            },
            c: Sweep::Many(vec![1, 2]),
            r: Sweep::One(100.0),
            scaling: Some(ScalingSpec {
                r: vec![50.0, 100.0, 200.0],
                c: 2,
                t: None,
            }),
            ..base(
                name,
                "5-qubit product-Z sensing under local dephasing with the repetition code, orders 1 and 2",
                5,
                HamiltonianSpec::ProductZ,
                NoiseSpec::LocalDephasing,
            )
        },
        "sm-s3b-sufficient" => Scenario {
            code: CodeSpec::Explicit {
                mu0: ghz_like(3, 1.0),
                mu1: ghz_like(3, -1.0),
            },
            ..base(
                name,
                "3-qubit product-Z under local dephasing; both P1 and P2 hold",
                3,
                HamiltonianSpec::ProductZ,
                NoiseSpec::LocalDephasing,
            )
        },
        "sm-s3b-p1-violated" => Scenario {
            code: CodeSpec::Explicit {
                mu0: vec![StateTerm::new("000", 1.0)],
                mu1: vec![StateTerm::new("111", 1.0)],
            },
            ..base(
                name,
                "3-qubit product-Z under local bit flips; errors do not commute with H",
                3,
                HamiltonianSpec::ProductZ,
                NoiseSpec::LocalBitflip,
            )
        },
        "sm-s3b-p2-violated" => Scenario {
            code: CodeSpec::Explicit {
                mu0: ghz_like(3, 1.0),
                mu1: ghz_like(3, -1.0),
            },
            ..base(
                name,
                "3-qubit H = (ZZZ + sum Z)/2 under local dephasing; H mixes code and error spaces",
                3,
                HamiltonianSpec::Pauli(
                    ["ZZZ", "ZII", "IZI", "IIZ"]
                        .iter()
                        .map(|l| PauliTerm {
                            coeff: 0.5,
                            label: (*l).into(),
                        })
                        .collect(),
                ),
                NoiseSpec::LocalDephasing,
            )
        },
        "sm-s3a-hnls-ok" | "sm-s3a-hnls-violated" => {
            let ok = name == "sm-s3a-hnls-ok";
            let (noise, mu0, mu1, desc) = if ok {
                (
                    NoiseSpec::Paulis(vec!["X".into()]),
                    "00",
                    "11",
                    "1 qubit + 1 noiseless ancilla, H = Z1, bit-flip noise; HNLS holds",
                )
            } else {
                (
                    NoiseSpec::Paulis(vec!["Z".into()]),
                    "++",
                    "--",
                    "1 qubit + 1 noiseless ancilla, H = Z1, dephasing noise; H lies in the Lindblad span",
                )
            };
            let mut s = Scenario {
                ancilla_qubits: 1,
                code: CodeSpec::Explicit {
                    mu0: vec![StateTerm::new(mu0, 1.0)],
                    mu1: vec![StateTerm::new(mu1, 1.0)],
                },
                r: Sweep::One(1e4),
                t: 2.0,
                samples: 20,
                ..base(name, desc, 1, HamiltonianSpec::SumZ, noise)
            };
            s.notes = vec!["T capped at 2: R*kappa = 1e3 forces dt near 2e-5".into()];
            s
        }
        "sm-s4a-infeasible" => base(
            name,
            "3-qubit sum-Z under rank-2 correlated dephasing; no eigenvalue pair admits a code",
            3,
            HamiltonianSpec::SumZ,
            NoiseSpec::Correlated {
                matrix: vec![8.0, 6.0, 4.0, 6.0, 6.0, 6.0, 4.0, 6.0, 8.0],
                factor: Some(vec![2.0, 1.0, 0.0, 0.0, 1.0, 2.0, 2.0, 2.0, 2.0]),
            },
        ),
        other => return Err(Error::UnknownPreset(other.into())),
    };
    Ok(s)
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub curves: bool,
    pub projected: bool,
    pub scaling: bool,
    pub out: Option<PathBuf>,
}

impl RunOptions {
    pub fn full() -> Self {
        RunOptions {
            curves: true,
            projected: true,
            scaling: true,
            out: None,
        }
    }

    pub fn diagnostics_only() -> Self {
        RunOptions::default()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchSummary {
    pub used_for_code: bool,
    pub failed: bool,
    pub chosen_pair: Option<(usize, usize)>,
    pub p_i: Option<Vec<f64>>,
    pub p_j: Option<Vec<f64>>,
    pub attempts: Vec<PairAttempt>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CodeSummary {
    pub source: &'static str,
    pub pair: Option<(usize, usize)>,
    pub h0: f64,
    pub h1: f64,
    pub logical_gap: f64,
    pub p_i: Vec<f64>,
    pub p_j: Vec<f64>,
    pub eigen_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KlSummary {
    pub satisfied: bool,
    pub max_offdiag: f64,
    pub max_diag_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HnlsSummary {
    pub satisfied: bool,
    pub perp_norm: f64,
    pub parallel_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderReport {
    pub c: usize,
    pub kl: KlSummary,
    pub properties: Option<PropertyReport>,
    pub block_form: Option<BlockFormReport>,
    /// p_n for n = 1..=c
    pub p: Vec<usize>,
    pub q_max: Option<usize>,
    pub corrections: usize,
    pub resets: usize,
    pub basis_error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveSummary {
    pub label: String,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub c: Option<usize>,
    pub final_qfi: f64,
    pub final_ideal: f64,
    pub final_projected: Option<f64>,
    pub data_processing_ok: bool,
    pub dt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: &'static str,
    pub scenario: Scenario,
    pub dim: usize,
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub search: Option<SearchSummary>,
    pub search_failed: bool,
    pub code: Option<CodeSummary>,
    pub hnls: HnlsSummary,
    pub noise_commutes: Vec<bool>,
    pub orders: Vec<OrderReport>,
    pub curves: Vec<CurveSummary>,
    pub scaling: Option<ScalingReport>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveRecord {
    pub label: String,
    pub r: Option<f64>,
    pub c: Option<usize>,
    pub curve: QfiCurve<f64>,
    pub projected: Option<QfiCurve<f64>>,
    pub ideal: Vec<f64>,
    pub data_processing: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub report: RunReport,
    pub curves: Vec<CurveRecord>,
    pub noqec: Option<CurveRecord>,
}

impl RunResult {
    pub fn curve(&self, r: f64, c: usize) -> Option<&CurveRecord> {
        self.curves
            .iter()
            .find(|k| k.c == Some(c) && k.r.is_some_and(|x| (x - r).abs() < 1e-9 * r.max(1.0)))
    }

    pub fn curves_csv(&self) -> String {
        let mut s = format!("label,{CURVE_HEADER}\n");
        let noqec = self.noqec.as_ref().map(|n| n.curve.qfi.as_slice());
        for rec in self.curves.iter().chain(self.noqec.iter()) {
            s.push_str(&record_table(rec, noqec).rows(Some(&rec.label)));
        }
        s
    }

    pub fn curve_csv(&self, rec: &CurveRecord) -> String {
        let noqec = self.noqec.as_ref().map(|n| n.curve.qfi.as_slice());
        record_table(rec, noqec).to_csv()
    }
}

fn record_table<'a>(rec: &'a CurveRecord, noqec: Option<&'a [f64]>) -> CurveTable<'a, f64> {
    let is_base = rec.r.is_none();
    CurveTable {
        times: &rec.curve.times,
        qfi: &rec.curve.qfi,
        qfi_projected: rec.projected.as_ref().map(|p| p.qfi.as_slice()),
        qfi_ideal: Some(&rec.ideal),
        qfi_noqec: if is_base { None } else { noqec },
    }
}

pub fn curve_label(r: f64, c: usize) -> String {
    format!("R{r}-c{c}")
}

struct OrderState {
    c: usize,
    scheme: Option<AutoQecScheme<f64>>,
}

/// Full pipeline: operators, code, diagnostics, engineered scheme, QFI curves, scaling.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunResult> {
    let start = Instant::now();
    scenario.validate()?;
    let h = scenario.hamiltonian_operator()?;
    let model = scenario.noise_model()?;
    let dim = h.rows();
    let orders = scenario.orders();
    let c_max = orders
        .iter()
        .copied()
        .chain(scenario.scaling.as_ref().map(|s| s.c))
        .max()
        .unwrap_or(1);
    let spectrum = group_spectrum(&h, crate::linalg::DEFAULT_CLUSTER_TOLERANCE)?;
    let errs = build_error_structure(&model, c_max)?;
    let hnls = check_hnls(&h, &errs)?;
    let noise_commutes = model.commutes_with_hamiltonian(&h)?;

    let explicit = scenario.explicit_code(&h)?;
    let search_errs = errs.truncated(orders[0]);
    let search = if spectrum.len() >= 2 {
        let out = search_code(&spectrum, &search_errs)?;
        Some(out)
    } else {
        None
    };
    let search_summary = search.as_ref().map(|s| SearchSummary {
        used_for_code: explicit.is_none(),
        failed: s.code.is_none(),
        chosen_pair: s.code.as_ref().and_then(|c| c.pair),
        p_i: s.code.as_ref().map(|c| c.p_i.clone()),
        p_j: s.code.as_ref().map(|c| c.p_j.clone()),
        attempts: s.attempts.clone(),
    });
    let code = match explicit {
        Some(c) => Some(c),
        None => search.and_then(|s| s.code),
    };
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.clone(),
        dim,
        eigenvalues: spectrum.eigenvalues().to_vec(),
        multiplicities: spectrum.multiplicities(),
        search_failed: code.is_none(),
        search: search_summary,
        code: None,
        hnls: HnlsSummary {
            satisfied: hnls.satisfied,
            perp_norm: hnls.perp_norm,
            parallel_norm: hnls.parallel_norm,
        },
        noise_commutes,
        orders: Vec::new(),
        curves: Vec::new(),
        scaling: None,
        wall_time_s: 0.0,
    };
    let Some(code) = code else {
        report.wall_time_s = start.elapsed().as_secs_f64();
        let result = RunResult {
            report,
            curves: Vec::new(),
            noqec: None,
        };
        write_outputs(&result, opts)?;
        return Ok(result);
    };
    report.code = Some(CodeSummary {
        source: if matches!(scenario.code, CodeSpec::Search) {
            "search"
        } else {
            "explicit"
        },
        pair: code.pair,
        h0: code.h0,
        h1: code.h1,
        logical_gap: code.logical_gap(),
        p_i: code.p_i.clone(),
        p_j: code.p_j.clone(),
        eigen_residual: code.eigen_residual(&h),
    });

    let mut all_orders = orders.clone();
    if let Some(s) = &scenario.scaling {
        if !all_orders.contains(&s.c) {
            all_orders.push(s.c);
        }
    }
    let mut states = Vec::new();
    for &c in &all_orders {
        let errs_c = errs.truncated(c);
        let kl = check_knill_laflamme(&code, &errs_c);
        let mut rep = OrderReport {
            c,
            kl: KlSummary {
                satisfied: kl.satisfied,
                max_offdiag: kl.max_offdiag,
                max_diag_gap: kl.max_diag_gap,
            },
            properties: None,
            block_form: None,
            p: Vec::new(),
            q_max: None,
            corrections: 0,
            resets: 0,
            basis_error: None,
        };
        let scheme = match build_correctable_basis(&code, &errs, c) {
            Ok(basis) => {
                rep.properties = Some(check_p1_p2(&h, &basis, &errs_c));
                rep.block_form = Some(verify_hamiltonian_block_form(&h, &basis, &code));
                rep.p = basis.p();
                rep.q_max = Some(basis.q_max());
                let r0 = scenario.r_values()[0];
                let scheme = build_engineered_dissipation(&basis, None, r0, scenario.kappa)?;
                rep.corrections = scheme.correction_count();
                rep.resets = scheme.reset_count();
                Some(scheme)
            }
            Err(e) => {
                rep.basis_error = Some(e.to_string());
                None
            }
        };
        if orders.contains(&c) {
            report.orders.push(rep);
        }
        states.push(OrderState { c, scheme });
    }

    let probe = scenario.probe_state(&code)?;
    let rho0 = pure_state(&probe);
    let mut curves = Vec::new();
    let mut noqec = None;
    if opts.curves {
        let mut tasks: Vec<(Option<f64>, Option<&OrderState>)> = Vec::new();
        for st in states.iter().filter(|s| orders.contains(&s.c) && s.scheme.is_some()) {
            for r in scenario.r_values() {
                tasks.push((Some(r), Some(st)));
            }
        }
        tasks.push((None, None));
        let results: Vec<Result<CurveRecord>> = tasks
            .par_iter()
            .map(|&(r, st)| {
                let scheme = st.and_then(|s| s.scheme.as_ref());
                let exp = Experiment {
                    h: &h,
                    model: &model,
                    scheme,
                    rho0: &rho0,
                };
                let mut cfg = SimulationConfig::new(scenario.w, scenario.kappa, r.unwrap_or(0.0), scenario.t);
                cfg.dt = scenario.dt;
                let qopts = QfiOptions {
                    samples: scenario.samples,
                    dw: scenario.dw,
                    projected: opts.projected && scheme.is_some(),
                };
                let label = match (r, st) {
                    (Some(r), Some(s)) => curve_label(r, s.c),
                    _ => "noqec".to_string(),
                };
                let run = qfi_curve(&exp, &cfg, &qopts, &label)?;
                let ideal: Vec<f64> = run.curve.times.iter().map(|&t| ideal_qfi(&h, &rho0, t)).collect();
                let data_processing = match &run.projected {
                    Some(p) => data_processing_check(&run.curve.qfi, &p.qfi, &ideal),
                    None => ideal_bound_check(&run.curve.qfi, &ideal),
                };
                Ok(CurveRecord {
                    label,
                    r,
                    c: st.map(|s| s.c),
                    curve: run.curve,
                    projected: run.projected,
                    ideal,
                    data_processing,
                })
            })
            .collect();
        for rec in results {
            let rec = rec?;
            report.curves.push(CurveSummary {
                label: rec.label.clone(),
                r: rec.r,
                c: rec.c,
                final_qfi: rec.curve.last().unwrap_or(0.0),
                final_ideal: rec.ideal.last().copied().unwrap_or(0.0),
                final_projected: rec.projected.as_ref().and_then(|p| p.last()),
                data_processing_ok: rec.data_processing.iter().all(|&b| b),
                dt: rec.curve.params.dt,
            });
            if rec.r.is_some() {
                curves.push(rec);
            } else {
                noqec = Some(rec);
            }
        }
    }

    if opts.scaling {
        if let Some(spec) = &scenario.scaling {
            if let Some(scheme) = states.iter().find(|s| s.c == spec.c).and_then(|s| s.scheme.as_ref()) {
                let exp = Experiment {
                    h: &h,
                    model: &model,
                    scheme: Some(scheme),
                    rho0: &rho0,
                };
                let t = spec.t.unwrap_or(scenario.t);
                let mut cfg = SimulationConfig::new(scenario.w, scenario.kappa, spec.r[0], t);
                cfg.dt = scenario.dt;
                report.scaling = Some(scaling_experiment(&exp, &spec.r, t, &cfg, scenario.dw, true)?);
            }
        }
    }

    report.wall_time_s = start.elapsed().as_secs_f64();
    let result = RunResult {
        report,
        curves,
        noqec,
    };
    write_outputs(&result, opts)?;
    Ok(result)
}

/// One trajectory of the full master equation at (R, c), or without AutoQEC when `c` is `None`.
pub fn simulate(scenario: &Scenario, r: f64, c: Option<usize>, record_every: usize) -> Result<Trajectory<f64>> {
    scenario.validate()?;
    let h = scenario.hamiltonian_operator()?;
    let model = scenario.noise_model()?;
    let order = c.unwrap_or(1);
    let errs = build_error_structure(&model, order)?;
    let code = match scenario.explicit_code(&h)? {
        Some(code) => code,
        None => {
            let spectrum = group_spectrum(&h, crate::linalg::DEFAULT_CLUSTER_TOLERANCE)?;
            search_code(&spectrum, &errs)?.code.ok_or(Error::SearchFailed)?
        }
    };
    let scheme = match c {
        Some(c) => {
            let basis = build_correctable_basis(&code, &errs, c)?;
            Some(build_engineered_dissipation(&basis, None, r, scenario.kappa)?)
        }
        None => None,
    };
    let rho0 = pure_state(&scenario.probe_state(&code)?);
    let mut cfg = SimulationConfig::new(scenario.w, scenario.kappa, r, scenario.t);
    cfg.dt = scenario.dt;
    cfg.record_every = record_every;
    integrate(&rho0, &h, scheme.as_ref(), &model, &cfg)
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

fn write_outputs(result: &RunResult, opts: &RunOptions) -> Result<()> {
    let Some(out) = &opts.out else {
        return Ok(());
    };
    let dir = out.join(&result.report.scenario.name);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&result.report)? + "\n")?;
    if result.noqec.is_some() || !result.curves.is_empty() {
        fs::write(dir.join("curves.csv"), result.curves_csv())?;
        let sub = dir.join("curves");
        fs::create_dir_all(&sub)?;
        for rec in result.curves.iter().chain(result.noqec.iter()) {
            fs::write(sub.join(format!("{}.csv", rec.label)), result.curve_csv(rec))?;
        }
    }
    if let Some(s) = &result.report.scaling {
        let v = Versioned {
            schema_version: SCHEMA_VERSION,
            body: s,
        };
        fs::write(dir.join("scaling.json"), serde_json::to_string_pretty(&v)? + "\n")?;
    }
    Ok(())
}
