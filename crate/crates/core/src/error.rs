use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no records")]
    NoRecords,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("test-partition labels were read {reads} time(s) before prediction")]
    Leakage { reads: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
