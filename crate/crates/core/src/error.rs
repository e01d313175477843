use thiserror::Error;

/// Errors produced by the estimation, projection and segmentation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DbacfError {
    /// An argument lies outside the domain of the operation (too few samples,
    /// lag out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data violates a type invariant.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A numerical routine failed (eigensolver, degenerate estimate).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An iterative routine stopped before meeting its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, DbacfError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(DbacfError::Domain(msg.into()))
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(DbacfError::Invalid(msg.into()))
}
