use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("embedding for {token:?} has {found} components, expected {expected}")]
    EmbeddingDimension {
        token: String,
        expected: usize,
        found: usize,
    },

    #[error("embedding line {line}: cannot parse {value:?} as a number")]
    EmbeddingValue { line: usize, value: String },

    #[error("length mismatch in {what}: {left} vs {right}")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("document {0:?} has no sentences")]
    EmptyDocument(String),

    #[error("document {0:?} has no extraction labels; run the `label` subcommand first")]
    MissingLabels(String),

    #[error("training labels contain no positive sentence; regenerate labels with a larger length limit")]
    NoPositiveLabels,

    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
