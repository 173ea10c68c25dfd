//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("unknown model name {0:?}")]
    UnknownModel(String),

    #[error("label out of range at line {line}: {value}")]
    LabelOutOfRange { line: usize, value: f64 },

    #[error("duplicate query_id {0:?}")]
    DuplicateQueryId(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("test fraction must lie in (0,1), got {0}")]
    InvalidFraction(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),
}

impl Error {
    /// Distinguishes bad user input (CLI exit code 1) from runtime
    /// failures such as i/o or numerical blow-ups (exit code 2).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::NonFinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
