use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite entry in matrix input")]
    NonFinite,

    #[error("matrix is not positive semidefinite Hermitian: {0}")]
    NotPsd(String),

    #[error("matrix is singular or ill-conditioned (condition number {0:.3e})")]
    Singular(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("data format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error comes from the numerics rather than from inputs or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular(_) | Error::Numerical(_) | Error::NotPsd(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
