use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max |A - A^T| = {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("time {t} is outside [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("filter step is unstable: l * tau_s = {product} must be < 1")]
    StabilityViolation { product: f64 },

    #[error("sample time {sample} does not match filter time {state}")]
    TimeMismatch { sample: f64, state: f64 },

    #[error("estimator law mismatch: state holds {actual}, step requires {expected}")]
    WrongLaw {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("trace covers {span} s but at least one window of {window} s is required")]
    InsufficientData { span: f64, window: f64 },

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed trace: {message}")]
    Trace { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
