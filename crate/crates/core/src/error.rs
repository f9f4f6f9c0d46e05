use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid generator config: {0}")]
    InvalidGenerator(String),

    #[error("cannot sample negatives: {0}")]
    Sampling(String),

    #[error("split failure: group `{group}` {reason}")]
    SplitFailure { group: String, reason: String },

    #[error("shape mismatch in {layer}: expected {expected}, got {got}")]
    Shape {
        layer: String,
        expected: usize,
        got: usize,
    },

    #[error("node {node} exceeds memory capacity {capacity}")]
    Capacity { node: usize, capacity: usize },

    #[error("training diverged at batch {batch}: {reason}")]
    Divergence { batch: usize, reason: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. })
    }

    /// Re-tag a divergence raised inside a layer with the batch it happened in.
    pub fn at_batch(self, batch: usize) -> Self {
        match self {
            Error::Divergence { reason, .. } => Error::Divergence { batch, reason },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
