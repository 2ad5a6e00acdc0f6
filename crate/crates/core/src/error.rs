use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty sample: {0}")]
    EmptySample(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("budget infeasible: {0}")]
    Infeasible(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("series diverged: {0}")]
    Divergence(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Numerical(_) | Error::Divergence(_) => 3,
            _ => 2,
        }
    }
}
