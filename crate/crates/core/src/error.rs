use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point outside the domain of {0}")]
    OutsideDomain(String),
    #[error("invalid benchmark: {0}")]
    InvalidBenchmark(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("not enough samples: need at least {need}, got {got}")]
    NotEnoughSamples { need: usize, got: usize },
    #[error("covariance matrix is singular even with jitter {0:e}")]
    SingularCovariance(f64),
    #[error("degrees of freedom must be at least 1, got {0}")]
    DegreesOfFreedom(i64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("rejection sampling exceeded {0} proposals")]
    RejectionCap(u64),
}
