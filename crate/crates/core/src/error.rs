use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("column `{0}` not matched between CSV header and schema")]
    MissingColumn(String),
    #[error("row {row}, column `{col}`: cannot parse numeric value")]
    UnparsableNumeric { row: usize, col: String },
    #[error("row {row}, column `{col}`: missing value")]
    MissingValue { row: usize, col: String },
    #[error("row {row}, column {col}: {reason}")]
    BadCell {
        row: usize,
        col: usize,
        reason: &'static str,
    },
    #[error("table has no rows")]
    EmptyTable,
    #[error("split fractions must be positive and sum to 1")]
    BadFractions,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("training table needs at least 2 rows, got {0}")]
    TrainTooSmall(usize),
    #[error("no ratios to aggregate")]
    EmptyRatios,
    #[error("invalid threshold {0}")]
    InvalidThreshold(f64),
    #[error("ratio {0} outside [0, 1]")]
    RatioOutOfRange(f64),

    #[error("column lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("schema has no target column")]
    NoTarget,
    #[error("class `{0}` has fewer than 2 rows")]
    ClassTooSmall(String),
    #[error("empty column")]
    EmptyColumn,
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("time {t} outside [0, {horizon}]")]
    BadTime { t: f64, horizon: f64 },
    #[error("noise level is zero")]
    ZeroSigma,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
