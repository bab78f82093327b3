use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} did not converge (residual {residual:e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("infeasible fit: constraint {index} cannot be satisfied")]
    Infeasible { index: usize },

    #[error("truncated mass bound {bound:e} exceeds threshold {threshold:e}; {hint}")]
    Truncation {
        bound: f64,
        threshold: f64,
        hint: String,
    },

    #[error("degenerate chain: {0}")]
    DegenerateChain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
