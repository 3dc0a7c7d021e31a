use thiserror::Error;

/// Errors produced by network parsing, matrix assembly, and the certificate
/// and boundary routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
