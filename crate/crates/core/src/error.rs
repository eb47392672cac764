//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by solvers, diagnostics, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("singular matrix")]
    SingularMatrix,

    #[error("zero mixing parameter")]
    ZeroMixingParameter,

    #[error("mixing parameter below the minimum magnitude {min_abs}: {beta}")]
    MixingParameterTooSmall { beta: f64, min_abs: f64 },

    #[error("schedule too short: step {step} has no mixing parameter")]
    ScheduleTooShort { step: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("grade undefined for zero residual")]
    ZeroResidual,

    #[error("Ar0 = 0 contradicts a nonsingular matrix with r0 != 0")]
    ZeroImage,

    #[error("trace unusable: {0}")]
    TraceMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
