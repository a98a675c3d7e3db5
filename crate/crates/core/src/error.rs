use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("expression `{expr}`: {message}")]
    Expression { expr: String, message: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("eigensolver: {0}")]
    Eigensolver(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
