use thiserror::Error;

use crate::conic::Violation;
use crate::solver::Status;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid program: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("solve failed on sample {index}: {status:?}")]
    SolveFailure { index: usize, status: Status },

    #[error("solver returned {0:?}")]
    Infeasible(Status),

    #[error("conflicting constraints: {0}")]
    ConflictingConstraints(String),

    #[error("row {row} is not affine in the noise: {reason}")]
    NotAffineInNoise { row: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
