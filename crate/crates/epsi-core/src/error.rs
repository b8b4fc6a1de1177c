use thiserror::Error;

/// Errors from operator construction, Matrix Market I/O, and generators.
#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: operator expects a vector of length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unsupported matrix market header token `{token}`: {reason}")]
    UnsupportedFormat { token: String, reason: String },

    #[error("matrix market parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid spectrum spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors from the Nystrom sketch construction and distortion estimation.
#[derive(Debug, Error)]
pub enum SketchError {
    #[error(
        "cholesky factorization of the sketch gram matrix failed at leading minor {minor} \
         (stability shift nu = {nu:.3e})"
    )]
    CholeskyFailed { nu: f64, minor: usize },

    #[error("sketch size {ell} out of range for dimension {n} (need 1 <= ell <= n)")]
    InvalidSketchSize { ell: usize, n: usize },

    #[error("dense distortion estimate refused for n = {n} (cap {cap}); use the power_residual mode")]
    DenseTooLarge { n: usize, cap: usize },

    #[error("invalid factored approximation: {0}")]
    InvalidParts(String),

    #[error("sketch sidecar file is corrupt: {0}")]
    SidecarFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised by the iterative solvers.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("rayleigh quotient of the zero vector is undefined")]
    ZeroVector,

    #[error("iteration breakdown: update norm {norm:.3e} is numerically zero")]
    Breakdown { norm: f64 },

    #[error(
        "woodbury inner system is singular (smallest singular value {sigma_min:.3e}): \
         the shift collided with a preconditioner eigenvalue; re-shift and retry"
    )]
    SingularInnerSystem { sigma_min: f64 },

    #[error("woodbury solve requires a nonzero shift lambda_hat")]
    ZeroShift,

    #[error("invalid solve options: {0}")]
    InvalidOptions(String),

    #[error("dimension mismatch in solver input: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}
