use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("source index {index} out of range for {n_sources} sources")]
    SourceOutOfRange { index: usize, n_sources: usize },

    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("unsupported integration measure: {0}")]
    UnsupportedMeasure(String),

    #[error("Gram matrix is ill-conditioned even with jitter {jitter:e}")]
    IllConditioned { jitter: f64 },

    #[error("GP state has not been factorized")]
    Unfactorized,

    #[error("candidate batch is degenerate: {0}")]
    DegenerateCandidate(String),

    #[error("numerical diagnostics failure: {0}")]
    Diagnostics(String),

    #[error("black-box query failed for source {source_index}: {reason}")]
    QueryFailed { source_index: usize, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
