use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("term `{term}` does not conserve the sector constraint ({constraint})")]
    NotConserving { term: String, constraint: String },

    #[error("term `{term}` maps basis state {state:#b} outside the sector")]
    LeavesSector { term: String, state: u64 },

    #[error("mode index {mode} out of range for {n_modes} modes")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("norm drift {drift:.3e} at t = {time} exceeds tolerance")]
    NormDrift { drift: f64, time: f64 },

    #[error("construction mismatch in {what}: deviation {deviation:.3e} > {tolerance:.1e}")]
    Mismatch {
        what: &'static str,
        deviation: f64,
        tolerance: f64,
    },

    #[error("infeasible size: estimated dimension {dimension} exceeds limit {limit}")]
    Infeasible { dimension: usize, limit: usize },

    #[error("outside perturbative window: {0}")]
    OutsideWindow(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
