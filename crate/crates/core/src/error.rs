use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphError {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("rank must be at least {required}, got {got}")]
    RankTooSmall { required: usize, got: usize },

    #[error("matrix is not in SL_n: determinant is {0}")]
    NonUnimodular(String),

    #[error("matrix shape mismatch: expected {expected}x{expected}, got {got}")]
    Shape { expected: usize, got: String },

    #[error("invalid coweight {0}")]
    InvalidCoweight(String),

    #[error("coweight entries must sum to zero, got {0}")]
    BadCoweightSum(i64),

    #[error("resource limit exceeded: {what} ({count} > cap {cap})")]
    ResourceLimit { what: &'static str, count: u128, cap: u128 },

    #[error("operands live in different contexts: {0} vs {1}")]
    ContextMismatch(String, String),

    #[error("coefficient at {0} is not an exact rational")]
    InexactCoefficient(String),

    #[error("matrix is not Hermitian: defect {0:e} exceeds tolerance")]
    NonHermitian(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, SphError>;
