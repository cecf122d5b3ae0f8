use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The covariance matrix could not be factorized, even after adding
    /// every jitter level in `jitters` to its diagonal.
    #[error("numerical failure: {context} (jitter levels tried: {jitters:?})")]
    NumericalFailure { context: String, jitters: Vec<f64> },

    #[error("optimization failure: {0}")]
    OptimizationFailure(String),

    /// A failure inside an optimization run, tagged with where it happened.
    #[error("run (seed {seed}) failed after {completed} evaluations: {source}")]
    Run {
        seed: u64,
        completed: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
