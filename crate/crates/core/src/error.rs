use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A physical or numerical input violates its documented contract.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A function was evaluated outside the domain where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method failed to converge.
    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    /// An integration step was rejected as too large; the caller should substep.
    #[error("step too large: relative state change {change:.3} exceeds {limit}")]
    StepSize { change: f64, limit: f64 },

    /// Adaptive integration collapsed below the minimum step.
    #[error("step size underflow at t = {t:e} s (last n = {last_state:e})")]
    StepUnderflow { t: f64, last_state: f64 },

    /// Least-squares problems that cannot be solved.
    #[error("fit failed: {0}")]
    Fit(String),

    /// A mesh does not resolve the geometry it is asked to discretise.
    #[error("mesh precondition violated: {0}")]
    Mesh(String),

    /// Wraps a lower-level error with the device radius it came from.
    #[error("radius {radius:e} m: {source}")]
    AtRadius {
        radius: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}

impl Error {
    /// True for failures of numerical procedures, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Convergence { .. }
            | Error::StepSize { .. }
            | Error::StepUnderflow { .. }
            | Error::Fit(_) => true,
            Error::AtRadius { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
