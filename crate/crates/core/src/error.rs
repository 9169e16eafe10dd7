use thiserror::Error;

/// Errors produced by the spatial-model and survey pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("correlation {rho} out of range for dimension {dim}: must lie in ({lo}, {hi})")]
    InvalidCorrelation { dim: usize, rho: f64, lo: f64, hi: f64 },

    #[error("matrix is not positive definite (pivot {pivot} at row {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("electorate is empty")]
    EmptyElectorate,

    #[error("design matrix is rank deficient in column `{column}`")]
    RankDeficient { column: &'static str },

    #[error("degenerate outcome: {0}")]
    DegenerateOutcome(String),

    #[error("logit fit did not converge: {0}")]
    NotConverged(String),

    #[error("missing CSV columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("fit failures: {}", .0.iter().map(|c| format!("[{}] {}", c.cell, c.error)).collect::<Vec<_>>().join("; "))]
    FitFailures(Vec<CellFailure>),

    #[error("i/o error: {0}")]
    Io(String),
}

/// One failed sub-fit, named by its cell label (e.g. `perception kerry econ I`).
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub cell: String,
    pub error: Box<Error>,
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
