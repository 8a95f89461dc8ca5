//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data (CSV problems, invariant breaches).
    #[error("data error: {0}")]
    Data(String),
    /// A mathematical operation was applied outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A model was applied to data whose schema does not match training.
    #[error("schema mismatch: {0}")]
    Schema(String),
    /// The operation does not support this input (e.g. numeric features in a
    /// categorical-only oracle).
    #[error("unsupported input: {0}")]
    Unsupported(String),
    /// Invalid configuration value.
    #[error("invalid config: {0}")]
    Config(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
