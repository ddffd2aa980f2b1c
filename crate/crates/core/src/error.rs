use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not positive semi-definite: {0}")]
    NotPsd(String),

    #[error("function kind `{0}` is not an indicator")]
    NotIndicator(&'static str),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("{which} subproblem could not be certified: inclusion residual {residual:e}")]
    Certification { which: &'static str, residual: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("step differences are undefined at k = 0")]
    NoStepHistory,

    #[error("iterate storage was disabled for this run")]
    IteratesNotStored,

    #[error("index {index} outside of 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("series has a non-positive entry at index {0}")]
    NonPositive(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("missing input: {0}")]
    Missing(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
