use std::path::Path;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("acceptance band failed: {0}")]
    Band(String),

    #[error("{path}:{line}: {msg}")]
    Trace { path: String, line: u64, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] steep::Error),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 0 success, 2 bad configuration or input, 3 numerical failure,
    /// 4 acceptance band missed; anything else is 1.
    pub fn exit_code(&self) -> i32 {
        use steep::Error as E;
        match self {
            Self::Config(_) | Self::Trace { .. } => 2,
            Self::Numerical(_) => 3,
            Self::Band(_) => 4,
            Self::Io { .. } => 1,
            Self::Core(e) => match e {
                E::Numerical(_) | E::UnsupportedGrid | E::NotReversible | E::EmptyMeasure => 3,
                E::Io(_) => 1,
                _ => 2,
            },
        }
    }
}
