use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("damping hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("invalid cutoff geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("Picard iteration did not converge in window {window} after {iterations} iterations (last update {residual:e})")]
    NoConvergence {
        window: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("outside the proven parameter regime: {0}")]
    OutOfRegime(String),
    #[error("invalid use: {0}")]
    InvalidUse(String),
    #[error("invalid search grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
