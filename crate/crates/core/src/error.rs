use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Scenario document could not be parsed.
    #[error("line {line}: {key}: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("cannot ingest {}: {message}", path.display())]
    Ingest { path: PathBuf, message: String },

    /// A non-finite value entered a streaming stage.
    #[error("non-finite value in {stage}")]
    NonFinite { stage: &'static str },

    /// The adaptive weights blew up (non-finite or norm above the limit).
    #[error("weights diverged at iteration {iteration} (norm {norm})")]
    Divergence { iteration: usize, norm: f64 },

    #[error("MSD trend fault: {0}")]
    TrendFault(String),

    /// A closed-form expression was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("all {trials} trials diverged")]
    AllDiverged { trials: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
