use thiserror::Error;

/// Errors shared by every module.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("solver failed: {message} (achieved {achieved:e})")]
    Solver { message: String, achieved: f64 },

    #[error("invalid state: {0}")]
    State(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("run did not finish: {0}")]
    Failure(String),

    #[error("iteration cap {iterations} reached with u = {u}, l = {l}")]
    IterationCap { iterations: usize, u: f64, l: f64 },

    #[error("missing artifacts: {0:?}")]
    MissingArtifacts(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>, achieved: f64) -> Self {
        Error::Solver { message: msg.into(), achieved }
    }

    /// True for errors caused by bad caller input rather than a failing computation.
    pub fn is_argument(&self) -> bool {
        matches!(self, Error::Argument(_) | Error::Parse(_) | Error::MissingArtifacts(_))
    }
}
