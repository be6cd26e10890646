use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("solver did not converge: {message} (last residual {last_residual:e} after {iterations} iterations)")]
    Solver {
        message: String,
        last_residual: f64,
        iterations: usize,
    },

    #[error("parameter out of regime: {0}")]
    OutOfRegime(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("element is not hyperbolic: {0}")]
    NonHyperbolic(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
