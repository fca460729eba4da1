use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    /// Offline minimization gave up; carries the best objective seen.
    #[error("comparator did not converge after {iterations} iterations (best value {best_value})")]
    ComparatorConvergence { iterations: usize, best_value: f64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("round {round}: gradient norm {norm} exceeds configured bound G = {bound}")]
    GradientBound { round: usize, norm: f64, bound: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
