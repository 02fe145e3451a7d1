//! Gauss-Seidel best-response iteration over any of the three best-response
//! back-ends.

use std::fmt;
use std::str::FromStr;

use crate::bti::{robust_best_response_gaussian_in, subproblem_threshold_gaussian};
use crate::cvar::{robust_best_response_in, subproblem_threshold};
use crate::deterministic::best_response_in;
use crate::error::{GameError, Result};
use crate::model::{Context, GameConfig, StrategyProfile};
use crate::options::SolverOptions;
use crate::scalar::Scalar;

/// Which uncertainty treatment drives each miner's best response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverMode {
    /// Nominal resources, no uncertainty.
    Deterministic,
    /// Gaussian uncertainty, Bernstein-type inequality.
    GaussianBti,
    /// Mean/variance ambiguity set, worst-case CVaR.
    DroCvar,
}

impl SolverMode {
    pub const ALL: [SolverMode; 3] = [SolverMode::Deterministic, SolverMode::GaussianBti, SolverMode::DroCvar];

    /// Short tag used in files and on the command line.
    pub fn tag(self) -> &'static str {
        match self {
            SolverMode::Deterministic => "det",
            SolverMode::GaussianBti => "bti",
            SolverMode::DroCvar => "cvar",
        }
    }

    pub fn is_robust(self) -> bool {
        !matches!(self, SolverMode::Deterministic)
    }
}

impl fmt::Display for SolverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SolverMode {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "det" | "deterministic" => Ok(SolverMode::Deterministic),
            "bti" | "gaussian_bti" => Ok(SolverMode::GaussianBti),
            "cvar" | "dro_cvar" => Ok(SolverMode::DroCvar),
            other => Err(GameError::InvalidConfig(format!("unknown solver mode `{other}`"))),
        }
    }
}

/// Strategies and thresholds after one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord<T> {
    pub alphas: Vec<T>,
    /// Robust thresholds, or nominal utilities in deterministic mode.
    pub u_mins: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult<T> {
    pub mode: SolverMode,
    pub profile: StrategyProfile<T>,
    /// Robust thresholds; `None` in deterministic mode.
    pub u_mins: Option<Vec<T>>,
    /// Nominal utility of every miner at the final profile.
    pub utilities: Vec<T>,
    /// Sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Starting point of the iteration.
    pub initial: SweepRecord<T>,
    /// One record per sweep.
    pub trace: Vec<SweepRecord<T>>,
    /// Best responses whose inner alternating optimization hit its cap; the
    /// last iterate was used.
    pub ao_failures: usize,
}

impl<T: Scalar> EquilibriumResult<T> {
    /// Thresholds when robust, nominal utilities otherwise.
    pub fn thresholds(&self) -> &[T] {
        self.u_mins.as_deref().unwrap_or(&self.utilities)
    }
}

fn nominal_utilities<T: Scalar>(profile: &StrategyProfile<T>, config: &GameConfig<T>) -> Result<Vec<T>> {
    let x = config.nominal_resources();
    (0..config.num_miners())
        .map(|j| crate::model::utility(j, profile, &x, &config.reward, config.miners[j].cost))
        .collect()
}

/// One miner's best response under `mode`: `(alpha, threshold, ao_capped)`.
/// In deterministic mode the threshold is the nominal utility at the response.
pub fn mode_best_response<T: Scalar>(
    mode: SolverMode,
    j: usize,
    profile: &StrategyProfile<T>,
    config: &GameConfig<T>,
    opts: &SolverOptions<T>,
) -> Result<(T, T, bool)> {
    let ctx = Context::for_miner(j, profile, config)?;
    let miner = config.miner(j)?;
    let start = profile.alphas[j];
    let capped = |e: GameError| match e {
        GameError::NotConverged { alpha, u_min, .. } => Ok((T::of(alpha), T::of(u_min), true)),
        other => Err(other),
    };
    match mode {
        SolverMode::Deterministic => {
            let a = best_response_in(&ctx, miner.nominal(), miner.cost, config.tau0)?;
            Ok((a, ctx.utility(a, miner.nominal(), miner.cost), false))
        }
        SolverMode::GaussianBti => {
            robust_best_response_gaussian_in(&ctx, miner, config.tau0, config.epsilon, start, opts)
                .map(|r| (r.alpha, r.u_min, false))
                .or_else(capped)
        }
        SolverMode::DroCvar => robust_best_response_in(&ctx, miner, config.tau0, config.epsilon, start, opts)
            .map(|r| (r.alpha, r.u_min, false))
            .or_else(capped),
    }
}

/// Threshold miner `j` can guarantee at a given `alpha` against the rest of
/// `profile`; the nominal utility in deterministic mode.
pub fn threshold_at<T: Scalar>(
    mode: SolverMode,
    j: usize,
    alpha: T,
    profile: &StrategyProfile<T>,
    config: &GameConfig<T>,
    opts: &SolverOptions<T>,
) -> Result<T> {
    let ctx = Context::for_miner(j, profile, config)?;
    let miner = config.miner(j)?;
    match mode {
        SolverMode::Deterministic => Ok(ctx.utility(alpha, miner.nominal(), miner.cost)),
        SolverMode::GaussianBti => subproblem_threshold_gaussian(alpha, &ctx, miner, config.epsilon, opts),
        SolverMode::DroCvar => subproblem_threshold(alpha, &ctx, miner, config.epsilon, opts).map(|(u, _)| u),
    }
}

/// Best-response iteration with default solver options.
pub fn solve_equilibrium<T: Scalar>(config: &GameConfig<T>, mode: SolverMode) -> Result<EquilibriumResult<T>> {
    solve_equilibrium_with(config, mode, &SolverOptions::default())
}

/// Sequential best-response iteration: miners update in ascending index
/// order, each against the latest strategies of the others, until
/// `sum |d alpha| + sum |d U|` over a sweep is at most `kappa`.
///
/// Failing to converge within `max_iterations` is reported through
/// `converged = false`, not as an error.
pub fn solve_equilibrium_with<T: Scalar>(
    config: &GameConfig<T>,
    mode: SolverMode,
    opts: &SolverOptions<T>,
) -> Result<EquilibriumResult<T>> {
    config.validate()?;
    if mode.is_robust() {
        if let Some(j) = config.miners.iter().position(|m| !(m.sigma2 > T::zero())) {
            return Err(GameError::InvalidConfig(format!(
                "miner {j}: robust modes need sigma2 > 0"
            )));
        }
    }

    let mut profile = config.initial_profile();
    let mut u = nominal_utilities(&profile, config)?;
    let initial = SweepRecord {
        alphas: profile.alphas.clone(),
        u_mins: u.clone(),
    };
    let mut trace = Vec::new();
    let mut converged = false;
    let mut ao_failures = 0;

    for _ in 0..config.max_iterations {
        let mut delta = T::zero();
        for j in 0..config.num_miners() {
            let (a, u_j, capped) = mode_best_response(mode, j, &profile, config, opts)?;
            ao_failures += usize::from(capped);
            delta = delta + (a - profile.alphas[j]).abs();
            if mode.is_robust() {
                delta = delta + (u_j - u[j]).abs();
            }
            profile.alphas[j] = a;
            u[j] = u_j;
        }
        if !mode.is_robust() {
            u = nominal_utilities(&profile, config)?;
        }
        trace.push(SweepRecord {
            alphas: profile.alphas.clone(),
            u_mins: u.clone(),
        });
        if delta <= config.kappa {
            converged = true;
            break;
        }
    }

    let utilities = nominal_utilities(&profile, config)?;
    Ok(EquilibriumResult {
        mode,
        iterations: trace.len(),
        u_mins: mode.is_robust().then_some(u),
        utilities,
        profile,
        converged,
        initial,
        trace,
        ao_failures,
    })
}
