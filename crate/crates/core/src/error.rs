use std::path::PathBuf;

use num_complex::Complex64;

/// Errors produced by the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("invalid profile entry at ({row}, {col}): {value}")]
    InvalidEntry { row: usize, col: usize, value: f64 },

    #[error("singular operator: {0}")]
    SingularOperator(String),

    #[error("spectrum proximity: min |1 - y*S(p)| = {distance:e} is below margin {margin:e} (y = {y})")]
    SpectrumProximity {
        y: Complex64,
        distance: f64,
        margin: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("branch ambiguity at w = {w}: {reason}")]
    BranchAmbiguity { w: Complex64, reason: String },

    #[error("decomposition failed for {rows}x{cols} matrix: {reason}")]
    Decomposition {
        rows: usize,
        cols: usize,
        reason: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("usage: {0}")]
    Usage(String),

    /// `--help` or `--version` output.
    #[error("{0}")]
    Help(String),

    #[error("hypothesis incompatibility: {0}")]
    Hypothesis(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
