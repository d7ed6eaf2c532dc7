use thiserror::Error;

/// Errors raised by the grid, kernel, solver and certification layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("range error: {0}")]
    Range(String),

    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error(
        "capacity error: {points} points exceeds the dense limit of {limit}; use the fast convolution path"
    )]
    Capacity { points: usize, limit: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{context}: not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        context: String,
        iterations: usize,
        residual: f64,
        /// Last iterate, when one exists.
        partial: Option<Vec<f64>>,
    },

    #[error("lookup error: {0}")]
    Lookup(String),
}

pub type Result<T> = std::result::Result<T, Error>;
