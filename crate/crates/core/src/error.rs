use thiserror::Error;

/// Errors from the numerical kernels and the approximation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got} (index {index})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
        index: usize,
    },

    #[error("non-finite value at position {position} in {context}")]
    NotFinite {
        context: &'static str,
        position: usize,
    },

    #[error("{context}: {message}")]
    InvalidArgument {
        context: &'static str,
        message: String,
    },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("matrix too large for the dense SVD oracle: min(m,n) = {min_dim} exceeds the cap {cap}; use the Monte-Carlo approximation instead")]
    OracleCapExceeded { min_dim: usize, cap: usize },

    #[error("eigenvalue/norm cross-check failed: lambda[{index}] = {lambda:.6e} but |A^T x|^2 = {norm_sq:.6e}")]
    LambdaMismatch {
        index: usize,
        lambda: f64,
        norm_sq: f64,
    },

    #[error("approximation norm decreased: sum(lambda) fell from {before:.6e} to {after:.6e}")]
    MonotonicityViolation { before: f64, after: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
