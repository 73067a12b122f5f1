use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or type invariant does not hold.
    #[error("{0}")]
    InvalidConfig(String),

    /// An operation received an argument outside its domain.
    #[error("{0}")]
    InvalidParameter(String),

    #[error("non-finite {what} at fading amplitude {at}")]
    NonFinite { what: &'static str, at: f64 },

    #[error("quadrature with {0} nodes requested; at most 256 are supported")]
    TooManyNodes(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("target (R = {rate}, D = {distortion}) unreachable with average power up to {cap}")]
    Unreachable {
        rate: f64,
        distortion: f64,
        cap: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
