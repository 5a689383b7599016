//! Crate-wide error type.

/// Errors surfaced by evaluators, constructors, and scans.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A scan or enumeration refused to run because it would exceed its
    /// budget. A partial scan is not an oracle, so we never truncate.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("protocol regime violation: {0}")]
    RegimeViolation(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
