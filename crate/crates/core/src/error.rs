use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// The caller handed us something that violates an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// An iterative method ran out of iterations before meeting its tolerance.
    #[error("did not converge after {iterations} iterations (final mismatch {final_mismatch:e}, tolerance {tolerance:e})")]
    Convergence {
        iterations: usize,
        final_mismatch: f64,
        tolerance: f64,
    },

    /// Internal solver failure; `dump` carries a JSON description of the instance.
    #[error("solver failure: {message}")]
    Solver { message: String, dump: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
