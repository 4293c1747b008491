use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument or value lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Integration step exceeds a tenth of the shortest admissible period.
    #[error("step contract violated: dt = {dt} s exceeds limit {limit} s (p_min / 10)")]
    StepContract { dt: f64, limit: f64 },

    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("mono required, file has {0} channels")]
    NotMono(u16),

    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("empty audio")]
    EmptyAudio,

    /// Malformed tabular input.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse(format!("{other:?}")),
        }
    }
}
