use thiserror::Error;

/// Everything that can go wrong while building or solving a model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid level index {index} for a {levels}-level emitter")]
    InvalidLevel { index: usize, levels: usize },

    #[error("signature mismatch: {0}")]
    Signature(String),

    #[error("invalid parameter `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error(
        "capacity exceeded: {elements} density elements > budget {budget}; \
         use the {suggestion} backend"
    )]
    Capacity {
        elements: usize,
        budget: usize,
        suggestion: &'static str,
    },

    #[error("scheme mismatch: {0}")]
    Scheme(String),

    #[error("invalid Dicke state: {0}")]
    Basis(String),

    #[error("step size collapsed to {step:.3e} s at t = {time:.3e} s; review tolerances and rates")]
    Stiffness { time: f64, step: f64 },

    #[error("steady state is not unique (residual {residual:.3e})")]
    Multiplicity { residual: f64 },

    #[error("state is not stationary (scaled residual {residual:.3e})")]
    NotStationary { residual: f64 },

    #[error("undefined normalization: mean photon number {0:.3e}")]
    Normalization(f64),

    #[error("numerical domain error: {0}")]
    Domain(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::Validation {
        field: field.to_string(),
        reason: reason.into(),
    }
}
