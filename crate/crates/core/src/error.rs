use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the rebalancing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o failure on {path}")]
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
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("unparseable value {value:?} at row {row}, column `{column}`")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("duplicate row id {0}")]
    DuplicateRowId(u64),
    #[error("no usable covariates remain after filtering")]
    NoUsableColumns,
    #[error("column `{0}` has zero variance; drop it with filter_columns first")]
    ZeroVariance(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("feature names do not match the model: expected {expected:?}, got {actual:?}")]
    NameMismatch {
        expected: Vec<String>,
        actual: Vec<String>,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("k = {k} exceeds the {available} available reference rows")]
    TooFewRows { k: usize, available: usize },
    #[error("all density scores are zero; the data has no density contrast")]
    NoDensityContrast,
    #[error("design matrix is rank deficient; dependent columns: {0:?}")]
    RankDeficient(Vec<String>),
    #[error("row sets differ between reports")]
    RowMismatch,
    #[error("strategy `{strategy}`, iteration {iteration}: {source}")]
    Experiment {
        strategy: String,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by bad input or configuration rather than a
    /// runtime failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => false,
            Error::Experiment { source, .. } => source.is_validation(),
            _ => true,
        }
    }
}
