use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature failed to converge: {what} (estimate {estimate:.6e}, error {error:.3e})")]
    QuadratureFailure {
        what: String,
        estimate: f64,
        error: f64,
    },

    #[error("limit does not stabilize: {0}")]
    Divergence(String),

    #[error("no truncation radius below {cap:.3e} brings exp(-t psi(R)) under {tail_tol:.1e}")]
    TruncationFailure { cap: f64, tail_tol: f64 },

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("rejection sampler gave up after {tries} proposals")]
    RejectionBudgetExceeded { tries: u64 },

    #[error("path horizon {available} is shorter than the required {required}")]
    HorizonMismatch { required: f64, available: f64 },

    #[error("Monte-Carlo budget exceeded: {0}")]
    Budget(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by bad user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Config(_))
    }
}
