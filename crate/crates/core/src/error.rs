use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("utility out of range: {0}")]
    UtilityOutOfRange(String),

    #[error("table size mismatch: expected {expected}, found {found}")]
    TableSizeMismatch { expected: usize, found: usize },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource guard exceeded: {what} needs {size} cells, cap is {cap}")]
    GuardExceeded { what: String, size: u128, cap: u128 },

    #[error("split index is not unique at node {0}")]
    NonUniqueSplit(String),

    #[error("degenerate leaf with support size {0}")]
    DegenerateLeaf(usize),

    #[error("cell signature mismatch among cell members")]
    SignatureMismatch,

    #[error("not an equilibrium: regret {0}")]
    NotAnEquilibrium(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
