use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("dataset file {path}: {reason}")]
    CorruptData { path: PathBuf, reason: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    EmptyData(&'static str),

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("unknown unlearning method `{0}`")]
    UnknownMethod(String),

    #[error("method `{method}` is incompatible with scenario `{scenario}`")]
    Incompatible { method: String, scenario: String },

    #[error("undefined baseline: {0} accuracy is zero")]
    UndefinedBaseline(&'static str),

    #[error("unknown report format `{0}`")]
    UnknownFormat(String),

    #[error("record schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u64, expected: u64 },

    #[error("config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
