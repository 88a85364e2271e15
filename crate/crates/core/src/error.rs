use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precoder is not unit norm (norm = {norm})")]
    NotUnitNorm { norm: f64 },

    #[error("transmit power constraint violated: trace = {trace}")]
    PowerViolation { trace: f64 },

    #[error("cannot stack a zero precoder")]
    ZeroPrecoder,

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error("average report mechanism needs at least one Monte-Carlo sample")]
    NoSamples,

    #[error("non-finite matrix entries in {0}")]
    NonFinite(&'static str),

    #[error("iterate has zero signal power for terrestrial user {0}")]
    SignalOrthogonal(usize),

    #[error("unknown {kind} `{value}`")]
    UnknownTag { kind: &'static str, value: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {message}")]
    Csv { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that stem from user-supplied configuration.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::ConfigParse { .. } | Error::InvalidConfig { .. } | Error::UnknownTag { .. }
        )
    }

    /// True for failures reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Csv { .. })
    }
}
