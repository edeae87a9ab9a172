use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet size must be at least 1")]
    EmptyAlphabet,

    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("non-finite probability at index {index}")]
    NonFinite { index: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("invalid type: {0}")]
    InvalidType(String),

    #[error("denominator {n} is too small to preserve the support of the distribution")]
    DenominatorTooSmall { n: u64 },

    #[error("indeterminate metric difference (inf - inf)")]
    IndeterminateGap,

    #[error("objective returned NaN")]
    NanObjective,

    #[error("infeasible marginal constraints: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
