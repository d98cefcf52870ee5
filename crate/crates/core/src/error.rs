use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file content, located by file and 1-based line.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A row parsed fine but violates a data invariant (labels, ids).
    #[error("row {id}: {message}")]
    Row { id: String, message: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("missing resource: {0}")]
    MissingResource(String),

    #[error("training {label}: {message}")]
    Training { label: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("model bundle: {0}")]
    Bundle(String),

    #[error("json {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn row(id: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Row {
            id: id.into(),
            message: message.into(),
        }
    }

    pub(crate) fn training(label: impl ToString, message: impl Into<String>) -> Self {
        Error::Training {
            label: label.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for this error: 1 usage/config, 2 data, 3 training/numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Row { .. }
            | Error::Data(_)
            | Error::MissingResource(_)
            | Error::Bundle(_)
            | Error::Json { .. } => 2,
            Error::Training { .. } | Error::Numerical(_) => 3,
        }
    }
}
