use thiserror::Error;

/// Errors raised by the game model and its solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("miner index {index} out of range for {len} miners")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("solver error: {0}")]
    Solver(String),

    /// Alternating optimization hit its iteration cap. Carries the last
    /// (still feasible) iterate.
    #[error("alternating optimization did not converge after {iterations} iterations (alpha={alpha}, u_min={u_min})")]
    NotConverged {
        iterations: usize,
        alpha: f64,
        u_min: f64,
    },
}

pub type Result<T> = std::result::Result<T, GameError>;
