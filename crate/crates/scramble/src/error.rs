use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    /// Malformed or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] scramble_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed output file {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
}

pub type RunResult<T> = std::result::Result<T, RunError>;

impl RunError {
    pub fn config(msg: impl Into<String>) -> Self {
        RunError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io { path: path.into(), source }
    }

    /// 2 for configuration and parameter-domain problems, 3 for numerical
    /// failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        use scramble_core::Error as E;
        match self {
            RunError::Config(_) => 2,
            RunError::Core(E::Numerical(_)) => 3,
            RunError::Core(_) => 2,
            RunError::Io { .. } | RunError::Parse { .. } => 1,
        }
    }
}
