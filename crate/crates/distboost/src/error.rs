use thiserror::Error;

/// Errors produced by the library's total-function contracts being violated.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("empty hypothesis list")]
    EmptyHypothesisList,

    #[error("point {point} out of range for domain size {n}")]
    PointOutOfRange { point: usize, n: usize },

    #[error("length mismatch: weight table has {weights} entries, sample has {sample}")]
    LengthMismatch { weights: usize, sample: usize },

    #[error("weak learner failure at round {round}")]
    WeakLearnerFailure { round: usize },

    #[error("hypothesis index {index} out of range for class of size {size}")]
    HypothesisIndexOutOfRange { index: usize, size: usize },

    #[error("explicit hypothesis table contains duplicate behaviors")]
    DuplicateBehavior,

    #[error("domain size mismatch: expected {expected}, got {got}")]
    DomainMismatch { expected: usize, got: usize },

    #[error("non-integral scaled weight value")]
    NonIntegralWeight,

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("invalid sample line {line}: {reason}")]
    ParseSample { line: usize, reason: String },

    #[error("exact approximation construction failed to verify")]
    ExactApproxFailed,
}

pub type Result<T> = std::result::Result<T, Error>;
