use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("index {index} out of range (limit {limit})")]
    Index { index: usize, limit: usize },

    #[error("capacity exhausted: d_active already at d_max = {d_max}")]
    CapacityExhausted { d_max: usize },

    #[error("invalid ablation: dimension {dim} is not active (d_active = {d_active})")]
    InvalidAblation { dim: usize, d_active: usize },

    #[error("model has no adapter dimensions (d_active = d_base = {d_base})")]
    NoAdapters { d_base: usize },

    #[error("no baseline: loss history is empty")]
    NoBaseline,

    #[error("non-finite or negative loss rejected: {0}")]
    BadLoss(f64),

    #[error("schedule exhausted: step {step} >= total_steps {total}")]
    ScheduleExhausted { step: usize, total: usize },

    #[error("insufficient data: need at least {need} samples, got {got}")]
    InsufficientData { need: usize, got: usize },

    #[error("zero vector has no cosine direction")]
    ZeroVector,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("format error at byte offset {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("config error on line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
