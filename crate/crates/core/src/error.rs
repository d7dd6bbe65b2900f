use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unstable queue: utilization rho = {rho} must lie in (0, 1)")]
    UnstableQueue { rho: f64 },

    /// `alpha = 0` makes the cost identically zero; ratios and areas divided by alpha are undefined.
    #[error("degenerate cost model: alpha = 0 leaves {0} undefined")]
    DegenerateAlpha(&'static str),

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate}, error estimate {abs_error})"
    )]
    NoConvergence {
        estimate: f64,
        abs_error: f64,
        subdivisions: usize,
    },

    #[error("insufficient data: {delivered} updates measured, need at least 2; increase the horizon or update count")]
    InsufficientData { delivered: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
