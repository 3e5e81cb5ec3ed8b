//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or layer shape disagreement.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Domain validation failure (bad argument, bad state).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A non-finite sample where finite data is required.
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    /// Structured parse failure with a human-readable location.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// Checkpoint format, version, or kind problem.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
