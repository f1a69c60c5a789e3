use std::path::PathBuf;

use thiserror::Error;
use topiclab::{CorpusError, DiagnosticsError, EvaluationError, InferenceError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("response store: {0}")]
    Store(String),
    #[error("session config: {0}")]
    Session(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Short stable name used in the machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::File { .. } | HarnessError::Io(_) => "io",
            HarnessError::Config(_) => "config",
            HarnessError::Corpus(_) => "corpus",
            HarnessError::Inference(_) => "inference",
            HarnessError::Diagnostics(_) => "diagnostics",
            HarnessError::Evaluation(_) => "evaluation",
            HarnessError::Manifest(_) => "manifest",
            HarnessError::Store(_) => "store",
            HarnessError::Session(_) => "session",
        }
    }

    pub fn file(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
        let path = path.into();
        move |source| HarnessError::File { path, source }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
