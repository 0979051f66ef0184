use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: bad tensor file: {reason}")]
    TensorFormat { path: PathBuf, reason: String },

    #[error("{context}: shape mismatch, expected {expected_rows}x{expected_cols}, found {rows}x{cols}")]
    ShapeMismatch {
        context: String,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("{context}: non-finite value at row {row}, column {col}")]
    NonFinite { context: String, row: usize, col: usize },

    #[error("{context}: row {row} has zero norm and cannot be normalized")]
    ZeroNorm { context: String, row: usize },

    #[error("video {video_id}: invalid field `{field}`: {reason}")]
    InvalidVideo {
        video_id: String,
        field: &'static str,
        reason: String,
    },

    #[error("duplicate video id {0}")]
    DuplicateVideo(String),

    #[error("class {class_id}: {reason}")]
    InvalidScript { class_id: String, reason: String },

    #[error("class {class_id}: no sub-action script available")]
    MissingScript { class_id: String },

    #[error("class {class_id}: no name embedding available")]
    MissingNameEmbedding { class_id: String },

    #[error("dimension mismatch: {left} vs {right} ({context})")]
    DimensionMismatch {
        context: String,
        left: usize,
        right: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty affinity matrix")]
    EmptyMatrix,

    #[error("unknown video id {0}")]
    UnknownVideo(String),

    #[error("no prediction for video {0}")]
    MissingPrediction(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or inconsistent inputs, as opposed
    /// to failures during a run.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::EmptyMatrix)
    }
}
