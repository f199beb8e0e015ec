use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("operator is not Hermitian (max |A - A^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("unknown Pauli label '{0}' (expected one of I, X, Y, Z)")]
    UnknownPauliLabel(char),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigenvalue clustering is ambiguous near {value}: it lies within tolerance of groups represented by {left} and {right}")]
    ClusteringAmbiguity { value: f64, left: f64, right: f64 },

    #[error("correlation matrix not PSD (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("eigenvalue pair must consist of two distinct groups, got ({0}, {0})")]
    SameGroup(usize),

    #[error("correctable-space dimensions differ between codewords at order {order}: {left} vs {right}")]
    DimensionSplitMismatch {
        order: usize,
        left: usize,
        right: usize,
    },

    #[error("error spaces of the two codewords overlap ({overlap:.3e}); the Knill-Laflamme condition is violated")]
    ErrorSpaceOverlap { overlap: f64 },

    #[error("reset target {index} has a component {leak:.3e} outside the code space")]
    ResetOutsideCodeSpace { index: usize, leak: f64 },

    #[error("integration unstable, reduce dt (t = {time}, trace error {trace_error:.3e}, min eigenvalue {min_eigenvalue:.3e})")]
    IntegrationUnstable {
        time: f64,
        trace_error: f64,
        min_eigenvalue: f64,
    },

    #[error("no eigenvalue pair admits a feasible probability vector; code search failed")]
    SearchFailed,

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
