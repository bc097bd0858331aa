use thiserror::Error;

/// Errors produced by marginals, couplings, costs, estimators, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quantile at t=0 is unbounded below")]
    Unbounded,
    #[error("invalid marginal: {0}")]
    InvalidMarginal(String),
    #[error("unknown cost `{0}`")]
    UnknownCost(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("non-finite cost term at ({0}, {1}, {2}, {3})")]
    NonFiniteCost(f64, f64, f64, f64),
    #[error("degenerate marginal: {0}")]
    DegenerateMarginal(String),
    #[error("degenerate denominator")]
    DegenerateDenominator,
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("initial plan is infeasible for the instance marginals")]
    InfeasibleInit,
    #[error("submodularity certificate failed")]
    NotSubmodular,
    #[error("marginal is not symmetric: {0}")]
    NotSymmetric(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
