use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BcpError>;

#[derive(Debug, Error)]
pub enum BcpError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("bad header in {path}: expected `{expected}`, found `{found}`")]
    BadHeader {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("malformed row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("negative score {value} at row {row}, column {column}")]
    NegativeScore { row: usize, column: usize, value: f64 },

    #[error("label {label} out of range [0, {num_labels}) at row {row}")]
    LabelOutOfRange {
        row: usize,
        label: i64,
        num_labels: usize,
    },

    #[error("need at least 2 labels, found {0}")]
    TooFewLabels(usize),

    #[error("need at least {required} calibration points, found {found}")]
    TooFewPoints { required: usize, found: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("probability row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid size cap {cap}: must satisfy 1 <= cap < {num_labels}")]
    InvalidCap { cap: usize, num_labels: usize },

    #[error("miscoverage level {0} outside (0, 1]")]
    AlphaOutOfRange(f64),

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("entropy-adaptive rule requires embeddings")]
    MissingEmbeddings,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bound precondition violated: n = {n} must exceed s_max/s_min = {ratio}")]
    BoundPrecondition { n: usize, ratio: f64 },

    #[error("missing expected score mu")]
    MissingMu,

    #[error("invalid config: {0}")]
    Config(String),
}

impl BcpError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BcpError::Io {
            path: path.into(),
            source,
        }
    }
}
