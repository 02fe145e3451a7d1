//! The three verbs: `solve`, `sweep` and `validate`.

use std::path::{Path, PathBuf};

use minegame_core::validate::{empirical_violation, sample_uncertainty, stream_seed, Solution, ViolationReport};
use minegame_core::{solve_equilibrium_with, EquilibriumResultF64, GameConfigF64, SolverMode};
use rayon::prelude::*;

use crate::output::{
    write_table, EQUILIBRIUM_HEADER, HISTOGRAM_HEADER, SWEEP_HEADER, TRACE_HEADER, VIOLATIONS_HEADER,
};
use crate::scenario::{Axis, Scenario};
use crate::CliError;

fn num(v: f64) -> String {
    v.to_string()
}

fn solve(scenario: &Scenario, config: &GameConfigF64, mode: SolverMode) -> Result<EquilibriumResultF64, CliError> {
    Ok(solve_equilibrium_with(config, mode, &scenario.solver.options())?)
}

pub fn equilibrium_rows(result: &EquilibriumResultF64, config: &GameConfigF64) -> Vec<Vec<String>> {
    config
        .miners
        .iter()
        .enumerate()
        .map(|(j, m)| {
            vec![
                j.to_string(),
                num(result.profile.alphas[j]),
                num(result.thresholds()[j]),
                num(m.x_hat),
                num(m.cost),
            ]
        })
        .collect()
}

/// Sweep 0 is the starting point.
pub fn trace_rows(result: &EquilibriumResultF64) -> Vec<Vec<String>> {
    std::iter::once(&result.initial)
        .chain(&result.trace)
        .enumerate()
        .flat_map(|(k, rec)| {
            rec.alphas
                .iter()
                .zip(&rec.u_mins)
                .enumerate()
                .map(move |(j, (a, u))| vec![k.to_string(), j.to_string(), num(*a), num(*u)])
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub mode: SolverMode,
    pub dir: PathBuf,
    pub result: EquilibriumResultF64,
}

/// Solves the scenario in every selected mode and writes `equilibrium.csv`
/// and `trace.csv`, directly under `out` for a single mode and under
/// `out/<mode>` otherwise.
pub fn run_solve(scenario: &Scenario, out: &Path) -> Result<Vec<SolveOutcome>, CliError> {
    let config = scenario.game_config()?;
    let modes = scenario.mode.modes();
    let single = modes.len() == 1;
    modes
        .par_iter()
        .map(|&mode| {
            let result = solve(scenario, &config, mode)?;
            let dir = if single { out.to_path_buf() } else { out.join(mode.tag()) };
            write_table(&dir.join("equilibrium.csv"), &EQUILIBRIUM_HEADER, &equilibrium_rows(&result, &config))?;
            write_table(&dir.join("trace.csv"), &TRACE_HEADER, &trace_rows(&result))?;
            Ok(SolveOutcome { mode, dir, result })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub mode: SolverMode,
    /// `None` when the point failed.
    pub sum_u_min: Option<f64>,
    pub sum_alpha_x: Option<f64>,
    pub sweeps: Option<usize>,
    pub status: &'static str,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.status == "converged"
    }

    fn cells(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        vec![
            num(self.axis_value),
            self.mode.tag().into(),
            opt(self.sum_u_min),
            opt(self.sum_alpha_x),
            self.sweeps.map(|s| s.to_string()).unwrap_or_default(),
            self.status.into(),
        ]
    }
}

fn sweep_point(scenario: &Scenario, axis: Axis, value: f64, mode: SolverMode) -> SweepRow {
    let solved = scenario
        .with_axis(axis, value)
        .and_then(|s| s.game_config().map(|c| (s, c)))
        .and_then(|(s, c)| solve(&s, &c, mode).map(|r| (c, r)));
    match solved {
        Ok((config, r)) => SweepRow {
            axis_value: value,
            mode,
            sum_u_min: Some(r.thresholds().iter().sum()),
            sum_alpha_x: Some(r.profile.total_load(&config.nominal_resources())),
            sweeps: Some(r.iterations),
            status: if r.converged { "converged" } else { "not_converged" },
        },
        Err(e) => {
            eprintln!("sweep point {value} ({mode}): {e}");
            SweepRow {
                axis_value: value,
                mode,
                sum_u_min: None,
                sum_alpha_x: None,
                sweeps: None,
                status: "failed",
            }
        }
    }
}

/// One row per (value, mode), in value-major order; points run in parallel.
/// Failed points are recorded, not fatal. Writes `out/sweep.csv`.
pub fn run_sweep(scenario: &Scenario, axis: Axis, values: &[f64], out: &Path) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let modes = scenario.mode.modes();
    let points: Vec<(f64, SolverMode)> = values
        .iter()
        .flat_map(|&v| modes.iter().map(move |&m| (v, m)))
        .collect();
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(v, m)| sweep_point(scenario, axis, v, m))
        .collect();
    let cells: Vec<Vec<String>> = rows.iter().map(SweepRow::cells).collect();
    write_table(&out.join("sweep.csv"), &SWEEP_HEADER, &cells)?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct ValidateOutcome {
    pub mode: SolverMode,
    pub converged: bool,
    pub reports: Vec<ViolationReport>,
}

/// Solves every selected mode, then samples each miner's resource under
/// every configured distribution and writes `histogram.csv` and
/// `violations.csv`. All modes see the same draws.
pub fn run_validate(scenario: &Scenario, out: &Path) -> Result<Vec<ValidateOutcome>, CliError> {
    let config = scenario.game_config()?;
    let distributions = scenario.distributions()?;
    let outcomes: Vec<ValidateOutcome> = scenario
        .mode
        .modes()
        .par_iter()
        .map(|&mode| {
            let result = solve(scenario, &config, mode)?;
            let solution = Solution::from(&result);
            let mut reports = Vec::new();
            for j in 0..config.num_miners() {
                for &d in &distributions {
                    let seed = stream_seed(scenario.seed, j, d);
                    let batch = sample_uncertainty(d, scenario.mu, scenario.sigma2, scenario.samples, seed)?;
                    reports.push(empirical_violation(j, &solution, &config, &batch, scenario.clamp)?);
                }
            }
            Ok(ValidateOutcome {
                mode,
                converged: result.converged,
                reports,
            })
        })
        .collect::<Result<_, CliError>>()?;

    let mut hist = Vec::new();
    let mut summary = Vec::new();
    for o in &outcomes {
        for r in &o.reports {
            let key = [o.mode.tag().to_string(), r.miner.to_string(), r.distribution.tag()];
            for (k, count) in r.histogram.counts.iter().enumerate() {
                let mut row = key.to_vec();
                row.extend([num(r.histogram.edges[k]), num(r.histogram.edges[k + 1]), count.to_string()]);
                hist.push(row);
            }
            let mut row = key.to_vec();
            row.extend([
                r.n_samples.to_string(),
                r.n_violations.to_string(),
                num(r.rate),
                num(r.epsilon),
                r.pass.to_string(),
                num(r.u_min),
                num(r.mean_utility),
            ]);
            summary.push(row);
        }
    }
    write_table(&out.join("histogram.csv"), &HISTOGRAM_HEADER, &hist)?;
    write_table(&out.join("violations.csv"), &VIOLATIONS_HEADER, &summary)?;
    Ok(outcomes)
}
