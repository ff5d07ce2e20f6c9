use faer::c64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("eigendecomposition did not converge")]
    EigenFailed,

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("matrix is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("spectrum is defective: eigenvector matrix condition number {condition:.3e}")]
    Defective { condition: f64 },

    #[error("steady state is not unique: {detail}")]
    NonUniqueSteadyState { detail: String },

    #[error("eigenvalue {value} is degenerate (closest other eigenvalue at distance {gap:.3e})")]
    Degenerate { value: c64, gap: f64 },

    #[error("solvability violated at order {order}: |<sigma, f>| = {residual:.3e} (allowed {allowed:.3e})")]
    SolvabilityViolation {
        order: usize,
        residual: f64,
        allowed: f64,
    },

    #[error("trace of the truncated series vanishes; cannot normalize")]
    NormalizationFailure,

    #[error(
        "Z0 system is singular (|zeta0[{index},{index}]| = {pivot:.3e}); increase the correction-matrix parameter c"
    )]
    SingularZ0 { index: usize, pivot: f64 },

    #[error(
        "amplitude series has no power-series solution: corrections grow by {growth:.3e} when c shrinks a hundredfold"
    )]
    AmplitudeSeriesBreakdown { growth: f64 },

    #[error("eigenpair tracking lost at alpha = {alpha} (best overlap {overlap:.3})")]
    TrackingLost { alpha: f64, overlap: f64 },

    #[error("errors are at the numerical noise floor (max {max_error:.3e}); slope is meaningless")]
    ErrorFloor { max_error: f64 },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
