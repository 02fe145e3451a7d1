//! Scenario runner behind the `minegame` binary: reads a JSON scenario,
//! runs the equilibrium solvers and writes CSV tables.

pub mod output;
pub mod run;
pub mod scenario;

pub use run::{run_solve, run_sweep, run_validate, SolveOutcome, SweepRow, ValidateOutcome};
pub use scenario::{Axis, ModeSelection, Scenario};

use minegame_core::GameError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed or out-of-domain scenario.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Solver(#[from] GameError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
