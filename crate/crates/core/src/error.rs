use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("instant {t} outside tabulated range [0, {max}]")]
    OutOfRange { t: f64, max: f64 },

    #[error("quadrature did not converge on [{lo}, {hi}] (error estimate {estimate:e})")]
    QuadratureNonConvergence { lo: f64, hi: f64, estimate: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("solver unstable at t = {t}: state norm {norm} exceeds bound, try a smaller step")]
    Unstable { t: f64, norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
