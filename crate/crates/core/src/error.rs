use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigenvalue solver failed: {0}")]
    EigenSolver(String),

    #[error("root classification failed: {0}")]
    Classification(String),

    #[error("roots not separated: {0}")]
    Separation(String),

    #[error("normalization failed: {0} (try reordering the series)")]
    Normalization(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("covariance not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("parameter outside its domain: {0}")]
    Domain(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("table coverage: {0}")]
    TableCoverage(String),

    #[error("table format: {0}")]
    TableFormat(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
