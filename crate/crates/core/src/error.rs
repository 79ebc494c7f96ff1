use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("content index {index} out of range for catalog of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("time step {dt:.3e} violates the stability bound {bound:.3e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("density became negative ({value:.3e}) at t = {t:.4}, x = {x:.4}, Q = {q:.4}")]
    NegativeDensity { value: f64, t: f64, x: f64, q: f64 },

    #[error("non-finite value function at t = {t:.4}, x = {x:.4}, Q = {q:.4}")]
    NonFiniteValue { t: f64, x: f64, q: f64 },

    #[error("backhaul barrier hit: L*p = {load:.6} >= B = {backhaul:.6}")]
    BarrierViolation { load: f64, backhaul: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {:.3e})", residuals.last().copied().unwrap_or(f64::NAN))]
    NotConverged { iterations: usize, residuals: Vec<f64> },

    #[error("query ({t:.4}, {x:.4}, {q:.4}) lies outside the policy lattice")]
    OutOfLattice { t: f64, x: f64, q: f64 },

    #[error("no eligible serving base station inside the reception ball")]
    NoCoverage,

    #[error("grid dump: {0}")]
    GridFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
