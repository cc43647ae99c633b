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

    #[error("{path}:{line}: invalid UTF-8")]
    Encoding { path: PathBuf, line: usize },

    #[error("{path}:{line}: sentence {sentence}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        sentence: usize,
        message: String,
    },

    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),

    #[error("invalid label {0:?}")]
    InvalidLabel(String),

    #[error("label count {labels} does not match token count {tokens}")]
    LengthMismatch { tokens: usize, labels: usize },

    #[error("empty sentence")]
    EmptySentence,

    #[error("empty n-gram")]
    EmptyGram,

    #[error("position {position} out of range for sentence of length {len}")]
    Position { position: usize, len: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("corpus contains only one class ({0})")]
    SingleClass(String),

    #[error("backend mismatch: expected {expected}, found {found}")]
    BackendMismatch { expected: String, found: String },

    #[error("sentence {index}: {message}")]
    Alignment { index: usize, message: String },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("model file version {found} is not supported (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
