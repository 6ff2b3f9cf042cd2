use thiserror::Error;

/// Errors surfaced by solver construction and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("grid of {requested} points exceeds the memory budget of {budget}")]
    BudgetExceeded { requested: usize, budget: usize },

    #[error("coefficient vector of length {actual} does not match index set of size {expected}")]
    Misaligned { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("iterative solver failed: {0}")]
    SolverFailure(String),

    #[error("operator is not positive definite (smallest Ritz value {0:.6e})")]
    Indefinite(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed grid file: {0}")]
    MalformedGridFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
