use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: target expects d = {expected}, state has d = {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empirical measure not yet populated")]
    EmptyMeasure,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("target not supported on grid: every cell has zero mass")]
    UnsupportedGrid,

    #[error("taxa mismatch: tree has {tree} taxa, alignment has {alignment}")]
    TaxaMismatch { tree: usize, alignment: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{what} too large: {size} exceeds the cap of {cap}")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("chain is not reversible; the spectral gap is only defined here for self-adjoint kernels")]
    NotReversible,

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
