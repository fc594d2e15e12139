use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Supporting-plane certification failed; `direction` is the worst sampled unit vector.
    #[error("certification failed: margin {margin:.3e} in direction {direction:?}")]
    Certification { direction: Vec<f64>, margin: f64 },

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("newton failed at t = {t} (dt = {dt}): {reason}")]
    StepFailure {
        t: f64,
        dt: f64,
        reason: String,
        residual_history: Vec<f64>,
    },

    #[error("graph condition violated at r = {r}: {reason}")]
    GraphCondition { r: f64, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical machinery itself (Newton, integrators,
    /// graph breakdown) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepFailure { .. } | Error::Shooting(_) | Error::GraphCondition { .. }
        )
    }
}
