use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid hardware domain: {0}")]
    InvalidDomain(String),

    #[error("invalid backbone: {0}")]
    InvalidBackbone(String),

    #[error("invalid architecture: {0}")]
    InvalidArch(String),

    #[error("invalid hardware configuration: {0}")]
    InvalidHwConfig(String),

    #[error("design-space count exceeds 2^63 - 1")]
    CountOverflow,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (jitter escalated to {max_jitter:e})")]
    NotPositiveDefinite { max_jitter: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid GA configuration: {0}")]
    InvalidGaConfig(String),

    #[error("invalid fitness weights: {0}")]
    InvalidWeights(String),

    #[error("design space has {size} points, above the exhaustive cap of {cap}")]
    SpaceTooLarge { size: u64, cap: u64 },

    #[error("predictor failed: {0}")]
    Predictor(String),

    /// `row` counts data rows from 1; the header is row 0.
    #[error("{path}: parse error at row {row}, column {column:?}: {message}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: String, message: String },
}
