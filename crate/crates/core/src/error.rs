use thiserror::Error;

use crate::maxsliced::DirectionResult;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("measure has empty support")]
    EmptySupport,
    #[error("weight {index} is negative or not finite ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, which is not within 1e-9 of 1")]
    WeightSumOutOfRange { sum: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coordinate {index} is not finite")]
    NonFiniteCoordinate { index: usize },
    #[error("invalid order p = {0}; p must be a finite real >= 1")]
    InvalidOrder(f64),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("argument out of range: {0}")]
    ArgumentOutOfRange(String),
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),
    #[error("dimension {0} is not supported by this operation")]
    UnsupportedDimension(usize),
    #[error("problem too large: {n} x {m} cost matrix exceeds the {limit} entry guard")]
    ProblemTooLarge { n: usize, m: usize, limit: usize },
    #[error("transport solver failed: {0}")]
    SolverFailure(String),
    #[error(
        "evaluation budget exhausted before tolerance was reached (bracket [{}, {}])",
        .0.lower, .0.upper
    )]
    BudgetExceeded(Box<DirectionResult>),
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_order(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(p))
    }
}
