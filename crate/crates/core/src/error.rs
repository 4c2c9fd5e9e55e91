use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PmlError {
    #[error("empty input: a profile needs at least one observed sample")]
    EmptyInput,
    #[error("frequency {0} appears more than once")]
    DuplicateFrequency(u64),
    #[error("invalid profile entry: {0}")]
    InvalidEntry(String),
    #[error("sample size {0} is too small, at least 2 samples are required")]
    InvalidSampleSize(u64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("scaling removed every level of the grid")]
    EmptyGrid,
    #[error("value {value} lies below the smallest grid level {min}")]
    BelowGrid { value: f64, min: f64 },
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("profile needs mass {needed} on the smallest level, which exceeds 1")]
    Infeasible { needed: f64 },
    #[error("solver stopped after {iterations} iterations with duality gap {gap}")]
    NonConvergence { gap: f64, iterations: usize },
    #[error("could not reduce the support to {limit} rows: {reason}")]
    SparsifyUnsupported { limit: usize, reason: String },
    #[error("swap would make an entry negative")]
    SwapInfeasible,
    #[error("transfer infeasible: {0}")]
    TransInfeasible(String),
    #[error("rounding precondition violated: {0}")]
    RoundPreconditionError(String),
    #[error("create precondition violated: {0}")]
    CreatePreconditionError(String),
    #[error("row {row} has non-integral sum {sum}")]
    NotIntegral { row: usize, sum: f64 },
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),
}

pub type Result<T> = std::result::Result<T, PmlError>;
