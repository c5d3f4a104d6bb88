use thiserror::Error;

use crate::rational::Q;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid utility structure: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidStructure(Vec<crate::game::Violation>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no {delta}-BIC recommendation policy exists for this signal structure")]
    DeltaInfeasible { delta: Q },

    #[error("separation parameter is undefined: utilities never differ across states")]
    NoSeparation,

    #[error("invalid coupling: {0}")]
    Coupling(String),

    #[error("horizon of {rounds} rounds is shorter than the exploration duration {required}")]
    HorizonTooShort { rounds: usize, required: usize },

    #[error("state {0} has zero prior mass")]
    ZeroPriorState(usize),

    #[error("observed signal value is outside the support of the declared signal structure")]
    SignalOutsideSupport,

    #[error("invalid sequel: {0}")]
    InvalidSequel(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
