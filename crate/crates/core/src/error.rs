use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kernel argument x = {x} lies outside the supported window [{min}, {max}]")]
    KernelOutOfWindow { x: f64, min: f64, max: f64 },

    #[error("numerical defect: {0}")]
    NumericalDefect(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),

    #[error("wraparound sentinel breached at t = {t}: boundary mass fraction {fraction:e}")]
    Wraparound { t: f64, fraction: f64 },

    #[error("config error in `{key}`: {reason}")]
    Config { key: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
