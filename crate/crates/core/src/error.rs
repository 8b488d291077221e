use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sign enumeration over {dims} coordinates exceeds the limit of {limit}")]
    EnumLimitExceeded { dims: usize, limit: usize },
    #[error("norm interval [{lower}, {upper}] straddles the threshold {threshold}")]
    InexactNorm {
        lower: f64,
        upper: f64,
        threshold: f64,
    },
    #[error("non-finite entry at {0}")]
    NonFiniteEntries(String),
    #[error("invalid rank {0}: must be at least 1")]
    InvalidRank(usize),
    #[error("operation requires (LInf, LInf) domains")]
    NotInfInfDomains,
    #[error("index {index} out of range for order-{order} form")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid interval [{a}, {b}] or point count {n}")]
    InvalidInterval { a: f64, b: f64, n: usize },
    #[error("kernel value at ({x}, {y}) is not finite")]
    NonFiniteKernelValue { x: f64, y: f64 },
    #[error("symmetric spectral path needs identical x and y grids")]
    AsymmetricGrids,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFiniteEntries(format!("{what}[{i}]"))),
        None => Ok(()),
    }
}
