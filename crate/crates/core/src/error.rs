use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the recourse pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("feature `{feature}` participates in an ordered constraint but has no reliable ordering: {reason}")]
    Ordering { feature: String, reason: String },

    #[error("column `{0}` is empty")]
    EmptyColumn(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid circuit at node {node}: {reason}")]
    InvalidCircuit { node: usize, reason: String },

    #[error("soft input violates the simplex for feature {feature}: {reason}")]
    Simplex { feature: usize, reason: String },

    #[error("zero probability: {0}")]
    ZeroProbability(String),

    #[error("labels contain a single class")]
    SingleClass,

    #[error("sampling exhausted after {draws} draws: accepted {accepted} of {target} requested")]
    SamplingExhausted {
        draws: usize,
        accepted: usize,
        target: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
