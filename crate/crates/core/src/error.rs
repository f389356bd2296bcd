use thiserror::Error;

/// Errors surfaced by the solvers, simulator and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("busy block {busy_block} cannot be given the minimum power: cumulative energy {available} < {required}")]
    InsufficientEnergy {
        busy_block: usize,
        available: f64,
        required: f64,
    },

    #[error("{solver} did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("energy causality violated at block {block}: buffer {buffer} < power {power}")]
    CausalityViolation { block: usize, buffer: f64, power: f64 },

    #[error("horizon K={k} exceeds the enumeration cap of {cap}")]
    HorizonTooLarge { k: usize, cap: usize },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
