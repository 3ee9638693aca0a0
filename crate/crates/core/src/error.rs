use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("no convergence within {budget} iterations (residual {residual:e})")]
    NonConvergence { budget: usize, residual: f64 },
    #[error("subproblem solver failed: residual {residual:e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
