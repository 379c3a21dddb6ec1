use thiserror::Error;

/// Errors raised by the model, solvers and oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dual variables outside the stationarity domain: lambda = {lambda}, mu * max(G) = {bound}")]
    Domain { lambda: f64, bound: f64 },

    #[error("grid mismatch: {left} samples vs {right} samples")]
    GridMismatch { left: usize, right: usize },

    #[error("singular admittance matrix at omega = {omega} (pivot {pivot})")]
    Singular { omega: f64, pivot: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("no convergence after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}
