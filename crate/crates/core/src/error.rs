use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("index out of range: {what} = {index} (limit {limit})")]
    OutOfRange { what: &'static str, index: usize, limit: usize },

    #[error("failed to parse config: {0}")]
    Config(String),

    #[error("run {run} (seed {seed}) failed: {source}")]
    Run {
        run: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Prefix the offending field with `scope`, so nested validation reports a full dotted path.
    pub(crate) fn scoped(self, scope: &str) -> Self {
        match self {
            Error::Invalid { field, reason } => Error::Invalid { field: format!("{scope}.{field}"), reason },
            other => other,
        }
    }
}
