use std::path::PathBuf;

/// Errors produced by dataset ingestion, model training and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum PhdError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path}, line {line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing feature matrix for video '{video_id}' (looked at {path})")]
    MissingFeatures { video_id: String, path: PathBuf },

    #[error("feature dimension mismatch for video '{video_id}': expected {expected}, got {actual}")]
    DimensionMismatch {
        video_id: String,
        expected: usize,
        actual: usize,
    },

    #[error("feature row count mismatch for video '{video_id}': {expected} segments but {actual} rows")]
    RowCountMismatch {
        video_id: String,
        expected: usize,
        actual: usize,
    },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("zero-norm feature vector in {context}")]
    ZeroNorm { context: String },

    #[error("vector length mismatch in {context}: {left} vs {right}")]
    LengthMismatch {
        context: String,
        left: usize,
        right: usize,
    },

    #[error("empty user history for user '{user_id}'")]
    EmptyHistory { user_id: String },

    #[error("cannot sample pairs for video '{video_id}': {reason}")]
    Sampling { video_id: String, reason: String },

    #[error("non-finite value in {location}")]
    NonFinite { location: String },

    #[error("solver did not converge within {iterations} iterations (last objective {objective})")]
    NonConvergence { iterations: usize, objective: f64 },

    #[error("bad checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PhdError>;

impl PhdError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PhdError::Io {
            path: path.into(),
            source,
        }
    }
}
