use thiserror::Error;

/// Errors produced by the detection toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: event ({x}, {y}) outside sensor {width}x{height}")]
    OutOfBounds {
        line: usize,
        x: u64,
        y: u64,
        width: u32,
        height: u32,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid interval: end {end} must be greater than start {start}")]
    InvalidInterval { start: f64, end: f64 },

    #[error("unknown roi id `{0}`")]
    UnknownRoi(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("stream has zero duration")]
    ZeroDuration,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("no ground-truth instances to evaluate against")]
    EmptyGroundTruth,

    #[error("training set must contain both positive and negative samples")]
    SingleClass,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
