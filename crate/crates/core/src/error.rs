use thiserror::Error;

/// Errors raised by the geometry routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("matrix is not invertible (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("path tracking gave up after {subdivisions} subdivisions: {detail}")]
    PathTracking { subdivisions: usize, detail: String },
    #[error("unsupported dimension n = {n}: {reason}")]
    UnsupportedDimension { n: usize, reason: &'static str },
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
