use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid argument, dimension mismatch or violated precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A matrix expected to be positive definite has a non-positive eigenvalue.
    #[error("matrix is not positive definite (minimum eigenvalue {min_eigenvalue:e})")]
    Degenerate { min_eigenvalue: f64 },

    /// A factorization that requires positive definiteness failed.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("eigensolver did not converge for a {dim}x{dim} matrix within {max_iterations} iterations")]
    EigenNonConvergence { dim: usize, max_iterations: usize },

    /// Conjugate gradient met a direction with non-positive curvature.
    #[error("operator is not positive definite: p'Ap = {curvature:e} at iteration {iteration}")]
    Indefinite { iteration: usize, curvature: f64 },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
