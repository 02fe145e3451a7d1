//! JSON scenario files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use minegame_core::validate::Distribution;
use minegame_core::{GameConfigF64, MinerParamsF64, RewardModelF64, SolverMode, SolverOptionsF64};
use rand::distr::{Distribution as _, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Reward {
    pub fixed_reward: f64,
    pub unit_tx_reward: f64,
    pub tx_count: f64,
}

impl Default for Reward {
    fn default() -> Self {
        Self {
            fixed_reward: 5000.0,
            unit_tx_reward: 10.0,
            tx_count: 300.0,
        }
    }
}

/// How the estimated resources `x_hat` are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Resources {
    Homogeneous { x_hat: f64 },
    /// `x_hat ~ U(lo, hi)`, drawn with `seed` or the scenario seed.
    Heterogeneous {
        lo: f64,
        hi: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// One value per miner; overrides `num_miners`.
    Explicit { x_hat: Vec<f64> },
}

impl Default for Resources {
    fn default() -> Self {
        Resources::Homogeneous { x_hat: 55.0 }
    }
}

/// `det`, `bti`, `cvar` or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeSelection {
    One(SolverMode),
    #[default]
    All,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<SolverMode> {
        match self {
            ModeSelection::One(m) => vec![m],
            ModeSelection::All => SolverMode::ALL.to_vec(),
        }
    }
}

impl FromStr for ModeSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(ModeSelection::All);
        }
        s.parse().map(ModeSelection::One).map_err(|e: minegame_core::GameError| e.to_string())
    }
}

impl fmt::Display for ModeSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeSelection::One(m) => write!(f, "{m}"),
            ModeSelection::All => f.write_str("all"),
        }
    }
}

impl Serialize for ModeSelection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModeSelection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Epsilon,
    FixedReward,
    UnitCost,
    NumMiners,
}

impl Axis {
    /// Sweep points used when neither the file nor the command line gives any.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            Axis::Epsilon => vec![0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5],
            Axis::FixedReward => vec![3000.0, 4000.0, 5000.0, 6000.0, 7000.0, 8000.0],
            Axis::UnitCost => vec![40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0],
            Axis::NumMiners => (3..=10).map(f64::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    #[serde(default)]
    pub values: Vec<f64>,
}

/// Numerical settings of the robust solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Solver {
    pub bisection_tol: f64,
    pub ao_tol: f64,
    pub ao_max_iterations: usize,
    pub scan_step: f64,
    pub refine_tol: f64,
}

impl Default for Solver {
    fn default() -> Self {
        let o = SolverOptionsF64::default();
        Self {
            bisection_tol: o.bisection_tol,
            ao_tol: o.ao_tol,
            ao_max_iterations: o.ao_max_iterations,
            scan_step: o.scan_step,
            refine_tol: o.refine_tol,
        }
    }
}

impl Solver {
    pub fn options(&self) -> SolverOptionsF64 {
        SolverOptionsF64 {
            bisection_tol: self.bisection_tol,
            ao_tol: self.ao_tol,
            ao_max_iterations: self.ao_max_iterations,
            scan_step: self.scan_step,
            refine_tol: self.refine_tol,
            ..SolverOptionsF64::default()
        }
    }
}

/// A full experiment description. Every field has a default, so `{}` is the
/// homogeneous five-miner game with the standard parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub name: String,
    pub num_miners: usize,
    pub reward: Reward,
    pub cost: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub tau0: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub max_iterations: usize,
    pub initial_alpha: f64,
    pub resources: Resources,
    pub mode: ModeSelection,
    pub solver: Solver,
    pub distributions: Vec<String>,
    pub samples: usize,
    pub seed: u64,
    pub clamp: bool,
    pub output: PathBuf,
    pub sweep: Option<Sweep>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "default".into(),
            num_miners: 5,
            reward: Reward::default(),
            cost: 60.0,
            mu: 0.0,
            sigma2: 100.0,
            x_min: 10.0,
            x_max: 100.0,
            tau0: 0.5,
            epsilon: 0.1,
            kappa: 1e-6,
            max_iterations: 100,
            initial_alpha: 0.35,
            resources: Resources::default(),
            mode: ModeSelection::All,
            solver: Solver::default(),
            distributions: vec!["gaussian".into(), "uniform".into(), "poisson".into()],
            samples: 1000,
            seed: 0,
            clamp: false,
            output: PathBuf::from("out"),
            sweep: None,
        }
    }
}

impl Scenario {
    /// Parses a scenario; errors carry the line and column of the problem.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Estimated resource of every miner.
    pub fn x_hats(&self) -> Result<Vec<f64>, CliError> {
        match &self.resources {
            Resources::Homogeneous { x_hat } => Ok(vec![*x_hat; self.num_miners]),
            Resources::Heterogeneous { lo, hi, seed } => {
                let dist = Uniform::new(*lo, *hi)
                    .map_err(|e| CliError::Config(format!("heterogeneous resources: {e}")))?;
                let mut rng = ChaCha20Rng::seed_from_u64(seed.unwrap_or(self.seed));
                Ok((0..self.num_miners).map(|_| dist.sample(&mut rng)).collect())
            }
            Resources::Explicit { x_hat } => Ok(x_hat.clone()),
        }
    }

    pub fn game_config(&self) -> Result<GameConfigF64, CliError> {
        let bad = |e: minegame_core::GameError| CliError::Config(e.to_string());
        let reward = RewardModelF64::new(self.reward.fixed_reward, self.reward.unit_tx_reward, self.reward.tx_count)
            .map_err(bad)?;
        let miners = self
            .x_hats()?
            .into_iter()
            .map(|x| MinerParamsF64::new(x, self.mu, self.sigma2, self.cost, self.x_min, self.x_max))
            .collect::<Result<Vec<_>, _>>()
            .map_err(bad)?;
        let mut config = GameConfigF64::new(miners, reward, self.tau0, self.epsilon).map_err(bad)?;
        config.kappa = self.kappa;
        config.max_iterations = self.max_iterations;
        config.initial_alpha = self.initial_alpha;
        config.validate().map_err(bad)?;
        Ok(config)
    }

    pub fn distributions(&self) -> Result<Vec<Distribution>, CliError> {
        self.distributions
            .iter()
            .map(|d| d.parse().map_err(|e: minegame_core::GameError| CliError::Config(e.to_string())))
            .collect()
    }

    /// Copy of the scenario with one parameter replaced.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<Self, CliError> {
        let mut s = self.clone();
        match axis {
            Axis::Epsilon => s.epsilon = value,
            Axis::FixedReward => s.reward.fixed_reward = value,
            Axis::UnitCost => s.cost = value,
            Axis::NumMiners => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(CliError::Config(format!("num_miners value {value} is not a positive integer")));
                }
                if matches!(s.resources, Resources::Explicit { .. }) {
                    return Err(CliError::Config("num_miners sweep needs homogeneous or heterogeneous resources".into()));
                }
                s.num_miners = value as usize;
            }
        }
        Ok(s)
    }
}
