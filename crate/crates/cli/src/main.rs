use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use minegame_cli::{run_solve, run_sweep, run_validate, Axis, CliError, ModeSelection, Scenario};

/// Equilibria of the proof-of-work mining game under resource uncertainty.
#[derive(Parser)]
#[command(name = "minegame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium; writes equilibrium.csv and trace.csv.
    Solve(Common),
    /// Re-solve over a parameter range; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary. Defaults to the scenario's `sweep.axis`.
        #[arg(long, value_enum)]
        axis: Option<Axis>,
        /// Comma-separated values. Defaults to `sweep.values`, then to a
        /// built-in range for the axis.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Sample the resource error and check the thresholds; writes
    /// histogram.csv and violations.csv.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON. Without it every field takes its default.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory. Overrides the scenario `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// det, bti, cvar or all. Overrides the scenario `mode`.
    #[arg(long)]
    mode: Option<ModeSelection>,
}

impl Common {
    fn scenario(&self) -> Result<(Scenario, PathBuf), CliError> {
        let mut s = match &self.config {
            Some(path) => Scenario::load(path)?,
            None => Scenario::default(),
        };
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(mode) = self.mode {
            s.mode = mode;
        }
        let out = self.out.clone().unwrap_or_else(|| s.output.clone());
        Ok((s, out))
    }
}

/// `Ok(true)` when every solve converged.
fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Solve(common) => {
            let (s, out) = common.scenario()?;
            let outcomes = run_solve(&s, &out)?;
            for o in &outcomes {
                eprintln!(
                    "{}: {} after {} sweeps -> {}",
                    o.mode,
                    if o.result.converged { "converged" } else { "not converged" },
                    o.result.iterations,
                    o.dir.display()
                );
            }
            Ok(outcomes.iter().all(|o| o.result.converged))
        }
        Command::Sweep { common, axis, values } => {
            let (s, out) = common.scenario()?;
            let axis = axis
                .or(s.sweep.as_ref().map(|w| w.axis))
                .ok_or_else(|| CliError::Config("no sweep axis given (--axis or sweep.axis)".into()))?;
            let values = if !values.is_empty() {
                values
            } else {
                match &s.sweep {
                    Some(w) if w.axis == axis && !w.values.is_empty() => w.values.clone(),
                    _ => axis.default_values(),
                }
            };
            let rows = run_sweep(&s, axis, &values, &out)?;
            eprintln!("{} sweep points -> {}", rows.len(), out.join("sweep.csv").display());
            Ok(rows.iter().all(|r| r.converged()))
        }
        Command::Validate(common) => {
            let (s, out) = common.scenario()?;
            let outcomes = run_validate(&s, &out)?;
            for o in &outcomes {
                for r in &o.reports {
                    eprintln!(
                        "{} miner {} {}: violation rate {} ({})",
                        o.mode,
                        r.miner,
                        r.distribution,
                        r.rate,
                        if r.pass { "pass" } else { "fail" }
                    );
                }
            }
            Ok(outcomes.iter().all(|o| o.converged))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: best-response iteration did not converge");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
