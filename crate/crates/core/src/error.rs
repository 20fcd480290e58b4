use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("metric is not positive: {0}")]
    NotPositive(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("section space is empty (p*k = {0}, need at least 2)")]
    EmptySpace(i64),
    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),
    #[error("Gram matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("geodesic oracle rejected: {0}")]
    OracleRejected(String),
    #[error("path is not a numerical geodesic: sup|c| = {0:.3e}")]
    NotGeodesic(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
