use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriationError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is disconnected into {} components (sizes {sizes:?})", sizes.len())]
    Disconnected { sizes: Vec<usize> },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not symmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("solver failed in round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<SeriationError>,
    },
}

pub type Result<T> = std::result::Result<T, SeriationError>;

impl From<std::io::Error> for SeriationError {
    fn from(e: std::io::Error) -> Self {
        SeriationError::Io(e.to_string())
    }
}
