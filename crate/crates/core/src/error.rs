use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Header or column declaration does not match the input.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Data that violates an input contract (negative ratio, empty table, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Object scores lost rank during orthonormalization.
    #[error("degenerate scores: {0}")]
    Degenerate(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("model selection failed: {0}")]
    Selection(String),

    #[error("artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },

    #[error("stage `{stage}` needs {artifact}, which is produced by `{producer}`")]
    MissingArtifact {
        stage: String,
        artifact: PathBuf,
        producer: String,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn artifact(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Artifact {
            path: path.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: stage.to_string(),
                source: Box::new(e),
            },
        }
    }
}
