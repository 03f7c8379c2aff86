use thiserror::Error;

/// Errors raised by the tempering toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (wrong length, non-finite value, empty set).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A mathematical hypothesis of the operation does not hold for the input.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A search left its admissible numeric range or failed to converge.
    #[error("numeric range error: {0}")]
    NumericRange(String),

    /// An exact computation would exceed the configured size limit.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// An iterative fit produced a non-finite loss.
    #[error("divergence: {0}")]
    Divergence(String),

    /// A file could not be parsed.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
