//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input file header does not match the declared schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A row failed validation while parsing in strict mode.
    #[error("row {line}: {reason}")]
    Row { line: usize, reason: String },

    /// A statistic is undefined for the given input (e.g. zero variance).
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    /// Caller passed an argument outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Not enough data to run the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
