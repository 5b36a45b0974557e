//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by spectral primitives, detectors and the experiment
/// harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (empty buffer, negative power,
    /// out-of-range bin, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two operands that must share a dimension do not.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// An experiment configuration failed validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A numerical routine failed (non-finite result, factorization
    /// breakdown).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Malformed text input (template files, delay profiles).
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems,
    /// 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::InvalidInput(_) | Error::Parse(_) => 2,
            Error::NumericalFailure(_) => 3,
            Error::DimensionMismatch { .. } => 2,
            Error::Io(_) => 1,
        }
    }
}
