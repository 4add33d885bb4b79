use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric (|a[{row}][{col}] - a[{col}][{row}]| = {gap:.3e})")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("index {index} out of range for {len} features")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("bad split size: n1 = {n1} with n = {n} (need 0 < n1 < n)")]
    BadSize { n1: usize, n: usize },

    #[error("bad fold count: {folds} folds for {n} samples")]
    BadFoldCount { folds: usize, n: usize },

    #[error("early stopping needs at least one step")]
    BadSteps,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("training loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear model spec has no true coefficient vector")]
    MissingBeta,

    #[error("exact Shapley enumeration limited to 12 features, got {0}")]
    TooManyFeatures(usize),

    #[error("no analytic truth available for {0}")]
    MissingTruth(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures that come from the numbers rather than from the
    /// caller's configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. } | Error::NonFiniteInput(_) | Error::NonFiniteLoss { .. }
        )
    }
}
