use thiserror::Error;

use crate::data::DataError;

/// Failures of the estimators. Each variant maps to a stable machine-readable
/// code used by the command-line front end.
#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("treatment arm {arm} has no rows")]
    EmptyArm { arm: u8 },
    #[error("treatment arm {arm} has {got} rows, at least {need} required")]
    TooFewRows { arm: u8, got: usize, need: usize },
    #[error("positivity violated: {0}")]
    Positivity(String),
    #[error("effect not identified: {0}")]
    NoIdentification(String),
    #[error("rank-deficient design: {0}")]
    RankDeficient(String),
    #[error("fit did not converge: {0}")]
    NonConvergence(String),
    #[error("quantity undefined: {0}")]
    Undefined(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{failed} of {total} bootstrap replicates failed")]
    BootstrapFailures { failed: usize, total: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

impl EstimationError {
    pub fn code(&self) -> &'static str {
        match self {
            EstimationError::EmptyArm { .. } => "EMPTY_ARM",
            EstimationError::TooFewRows { .. } => "INSUFFICIENT_DATA",
            EstimationError::Positivity(_) => "POSITIVITY",
            EstimationError::NoIdentification(_) => "NO_IDENTIFICATION",
            EstimationError::RankDeficient(_) => "RANK_DEFICIENT",
            EstimationError::NonConvergence(_) => "NON_CONVERGENCE",
            EstimationError::Undefined(_) => "UNDEFINED",
            EstimationError::InvalidArgument(_) => "INVALID_ARGUMENT",
            EstimationError::BootstrapFailures { .. } => "BOOTSTRAP_FAILURES",
            EstimationError::Data(_) => "DATA",
        }
    }
}

pub type Result<T> = std::result::Result<T, EstimationError>;
