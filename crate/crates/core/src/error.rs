use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("target word {word:?} not found in sentence")]
    TargetNotFound { word: String },

    #[error("provider failure: {0}")]
    ProviderFailure(String),

    #[error("encoded sequence has {len} tokens, provider accepts at most {max}")]
    SequenceTooLong { len: usize, max: usize },

    #[error("no substitution candidates survived filtering for {word:?}")]
    EmptyCandidateSet { word: String },

    #[error("run config weights feature {0:?} but no score was provided for it")]
    MissingFeature(String),

    #[error("no usable instance for feature selection: {0}")]
    DegenerateRanking(String),

    #[error("metric column {0:?} has zero variance")]
    DegenerateColumn(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}:{line}: invalid UTF-8", path.display())]
    Encoding { path: PathBuf, line: usize },

    #[error("config key {key:?}: {msg}")]
    Config { key: String, msg: String },

    #[error("duplicate prediction {word:?}")]
    DuplicatePrediction { word: String },

    #[error("prediction file misaligned with gold at line {line}: {msg}")]
    Misaligned { line: usize, msg: String },

    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub fn is_provider_error(&self) -> bool {
        matches!(
            self,
            Error::ProviderFailure(_) | Error::SequenceTooLong { .. }
        )
    }
}
