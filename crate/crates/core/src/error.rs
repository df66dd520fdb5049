use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("signal is zero everywhere")]
    ZeroSignal,

    #[error("series is zero everywhere")]
    ZeroSeries,

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {token:?}")]
    Parse {
        line: usize,
        column: usize,
        token: String,
    },

    #[error("ragged rows: line {line} has {found} columns, expected {expected}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("malformed EDF header field `{field}`: {detail}")]
    MalformedHeader { field: String, detail: String },

    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),

    #[error("truncated data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: u64, found: u64 },

    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
