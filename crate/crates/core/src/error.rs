use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The schema is malformed, or a CSV header does not cover it.
    #[error("schema error: {0}")]
    Schema(String),

    /// A record could not be mapped into the schema's domains.
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    /// A mechanism or accounting parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A closed-form expression was evaluated outside the region where it holds.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs are well-formed individually but inconsistent with each other.
    #[error("structural error: {0}")]
    Structure(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
