use thiserror::Error;

/// Errors raised by the law, derivative, integration and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("time {t} is outside the open interval before the terminal time {tf}")]
    Domain { t: f64, tf: f64 },

    #[error("derivative order {order} is outside the supported range 1..={max}")]
    OrderOutOfRange { order: usize, max: usize },

    #[error("invalid integration settings: {0}")]
    Settings(String),

    #[error("singularity classification inconclusive: fit residual {residual:.3e} exceeds {threshold:.3e}")]
    Inconclusive { residual: f64, threshold: f64 },

    #[error("trajectory has no samples")]
    EmptyTrajectory,

    #[error("trajectory diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("mismatched law: {0}")]
    MismatchedLaw(String),
}

pub type Result<T> = std::result::Result<T, Error>;
