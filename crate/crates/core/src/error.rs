use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("meshes are not related by one uniform refinement: {0}")]
    NotParentChild(String),

    #[error("iterative solve did not converge after {iterations} iterations (relative residual {relative_residual:.3e})")]
    NotConverged {
        iterations: usize,
        relative_residual: f64,
    },

    #[error("MINRES breakdown after {iterations} iterations: {reason}")]
    Breakdown { iterations: usize, reason: String },

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    NewtonNotConverged { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("dense eigen-solve limited to {limit} unknowns, got {size}")]
    SizeLimitExceeded { size: usize, limit: usize },

    #[error("Ritz initialization requires derivative data: {0}")]
    MissingDerivatives(&'static str),
}
