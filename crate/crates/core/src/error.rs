use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the inference pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-numeric cell {value:?} in column `{column}` at data row {row}")]
    NonNumeric { row: usize, column: String, value: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("treatment column `{0}` is not binary")]
    NotBinary(String),

    #[error("duplicate column name `{0}`")]
    DuplicateName(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("column {column} has zero mean and cannot be scaled")]
    ZeroMean { column: usize },

    #[error("no untreated rows in the selection")]
    NoUntreated,

    #[error("no treated rows in the selection")]
    NoTreated,

    #[error("design matrix is rank deficient (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("non-finite training loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("learning curve has fewer than two decreasing points at the largest sizes")]
    NoDecreasingSection,

    #[error("{players} players exceed the enumeration cap of {cap}")]
    TooManyPlayers { players: usize, cap: usize },

    #[error("coalitions overlap")]
    Overlap,

    #[error("decompositions are incompatible: {0}")]
    Incompatible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
