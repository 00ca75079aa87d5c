use thiserror::Error;

/// Errors raised by the moment, generator, solver and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("divergent moment: {0}")]
    DivergentMoment(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("second derivative at 0 is required when the measure charges the small-jump ball")]
    MissingSecondDerivative,

    #[error("time step {dt} exceeds the stability bound {bound}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("non-finite value at node {node} after step {step}")]
    NonFiniteValue { node: usize, step: usize },

    #[error("condition violation: {0}")]
    ConditionViolation(String),

    #[error("time {t} is outside the solved horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
