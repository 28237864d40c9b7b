use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid extent {extent:?}: every extent must be at least 1")]
    InvalidExtent { extent: Vec<usize> },

    #[error("index box has {0} elements, more than the supported 2^31")]
    TooLarge(u128),

    #[error("filter extent {filter:?} exceeds data extent {data:?}")]
    FilterTooLarge { filter: Vec<usize>, data: Vec<usize> },

    #[error("index box is not contained in the target box")]
    NotContained,

    #[error("valid convolution set is empty")]
    EmptyValidSet,

    #[error("value array has length {found}, box cardinality is {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("support mismatch: {0}")]
    SupportMismatch(&'static str),

    #[error("dense matrix of {entries} entries exceeds the oracle budget of {budget}")]
    BudgetExceeded { entries: u128, budget: u128 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("singular value decomposition failed: {0}")]
    Svd(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reference signal is zero")]
    ZeroReference,

    #[error("signal is zero")]
    ZeroSignal,

    #[error("log-determinant of a singular matrix is -inf")]
    SingularLogDet,

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
}
