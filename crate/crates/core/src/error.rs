use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    NumericInput(&'static str),

    #[error("not ready: {0}")]
    NotReady(&'static str),

    #[error("shape mismatch: {what} (expected {expected}, got {got})")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("gradient rejected: non-finite entry in {0}")]
    NonFiniteGradient(&'static str),

    #[error("numeric failure at t={t_ms} ms: {reason}")]
    Diverged { t_ms: u64, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(what: &'static str, expected: usize, got: usize) -> Self {
        Error::Shape {
            what,
            expected,
            got,
        }
    }
}
