//! Domain types and the deterministic utility of the mining game.
//!
//! A miner `j` commits a fraction `alpha_j` of its computing resource `x_j`.
//! Its block-win probability is the hash-power share
//! `h_j = alpha_j x_j / sum_k alpha_k x_k` and its utility is
//! `R h_j - c_j alpha_j x_j`, where `R` is the total block reward.
//!
//! Whenever one miner reasons about its own random resource, the other
//! miners' resources enter at their nominal value `x_hat + mu`; see
//! [`Context`].

use crate::error::{GameError, Result};
use crate::scalar::Scalar;

/// Block reward: a fixed part plus per-transaction fees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardModel<T> {
    pub fixed_reward: T,
    pub unit_tx_reward: T,
    pub tx_count: T,
}

impl<T: Scalar> RewardModel<T> {
    pub fn new(fixed_reward: T, unit_tx_reward: T, tx_count: T) -> Result<Self> {
        let r = Self {
            fixed_reward,
            unit_tx_reward,
            tx_count,
        };
        r.validate()?;
        Ok(r)
    }

    /// Fixed reward 5000, 10 per transaction, 300 transactions.
    pub fn table_one() -> Self {
        Self {
            fixed_reward: T::of(5000.0),
            unit_tx_reward: T::of(10.0),
            tx_count: T::of(300.0),
        }
    }

    /// Total reward `fixed + unit * count`.
    pub fn total(&self) -> T {
        self.fixed_reward + self.unit_tx_reward * self.tx_count
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if !(self.fixed_reward >= zero && self.unit_tx_reward >= zero && self.tx_count >= zero) {
            return Err(GameError::InvalidConfig(
                "reward components must be nonnegative".into(),
            ));
        }
        if !(self.total() > zero) || !self.total().is_finite() {
            return Err(GameError::InvalidConfig("total reward must be positive".into()));
        }
        Ok(())
    }
}

/// One miner's resource estimate, uncertainty moments and cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinerParams<T> {
    /// Estimated available computing resource.
    pub x_hat: T,
    /// Mean of the resource error.
    pub mu: T,
    /// Variance of the resource error.
    pub sigma2: T,
    /// Cost per unit of committed resource.
    pub cost: T,
    pub x_min: T,
    pub x_max: T,
}

impl<T: Scalar> MinerParams<T> {
    pub fn new(x_hat: T, mu: T, sigma2: T, cost: T, x_min: T, x_max: T) -> Result<Self> {
        let m = Self {
            x_hat,
            mu,
            sigma2,
            cost,
            x_min,
            x_max,
        };
        m.validate()?;
        Ok(m)
    }

    /// Cost 60, bounds [10, 100], zero-mean error with standard deviation `sigma`.
    pub fn table_one(x_hat: T, sigma: T) -> Self {
        Self {
            x_hat,
            mu: T::zero(),
            sigma2: sigma * sigma,
            cost: T::of(60.0),
            x_min: T::of(10.0),
            x_max: T::of(100.0),
        }
    }

    /// Nominal resource `x_hat + mu`, the mean of the realized resource.
    pub fn nominal(&self) -> T {
        self.x_hat + self.mu
    }

    pub fn sigma(&self) -> T {
        self.sigma2.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let bad = |msg: &str| Err(GameError::InvalidConfig(msg.into()));
        if !(self.x_hat > zero) {
            return bad("x_hat must be positive");
        }
        if !(self.sigma2 >= zero) {
            return bad("sigma2 must be nonnegative");
        }
        if !(self.cost > zero) {
            return bad("cost must be positive");
        }
        if !(self.x_min > zero && self.x_min <= self.x_hat && self.x_hat <= self.x_max) {
            return bad("bounds must satisfy 0 < x_min <= x_hat <= x_max");
        }
        if !(self.nominal() > zero) {
            return bad("nominal resource x_hat + mu must be positive");
        }
        Ok(())
    }
}

/// Game parameters shared by all miners.
#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig<T> {
    pub miners: Vec<MinerParams<T>>,
    pub reward: RewardModel<T>,
    /// Participation floor on every investment coefficient.
    pub tau0: T,
    /// Tolerated violation probability of the utility chance constraint.
    pub epsilon: T,
    /// Stopping threshold of the best-response iteration.
    pub kappa: T,
    /// Cap on best-response sweeps.
    pub max_iterations: usize,
    /// Starting investment coefficient, projected onto `[tau0, 1]`.
    pub initial_alpha: T,
}

impl<T: Scalar> GameConfig<T> {
    pub fn new(miners: Vec<MinerParams<T>>, reward: RewardModel<T>, tau0: T, epsilon: T) -> Result<Self> {
        let c = Self {
            miners,
            reward,
            tau0,
            epsilon,
            kappa: T::of(1e-6),
            max_iterations: 100,
            initial_alpha: T::of(0.35),
        };
        c.validate()?;
        Ok(c)
    }

    /// Table I parameters with `j` identical miners.
    pub fn homogeneous(j: usize, x_hat: T, sigma: T) -> Self {
        Self::with_resources(&vec![x_hat; j], sigma)
    }

    /// Table I parameters with one miner per entry of `x_hats`.
    pub fn with_resources(x_hats: &[T], sigma: T) -> Self {
        Self {
            miners: x_hats.iter().map(|&x| MinerParams::table_one(x, sigma)).collect(),
            reward: RewardModel::table_one(),
            tau0: T::of(0.5),
            epsilon: T::of(0.1),
            kappa: T::of(1e-6),
            max_iterations: 100,
            initial_alpha: T::of(0.35),
        }
    }

    pub fn num_miners(&self) -> usize {
        self.miners.len()
    }

    pub fn nominal_resources(&self) -> Vec<T> {
        self.miners.iter().map(MinerParams::nominal).collect()
    }

    pub fn costs(&self) -> Vec<T> {
        self.miners.iter().map(|m| m.cost).collect()
    }

    pub fn miner(&self, j: usize) -> Result<&MinerParams<T>> {
        self.miners.get(j).ok_or(GameError::IndexOutOfRange {
            index: j,
            len: self.miners.len(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.miners.len() < 2 {
            return Err(GameError::InvalidConfig("at least two miners are required".into()));
        }
        for (j, m) in self.miners.iter().enumerate() {
            m.validate()
                .map_err(|e| GameError::InvalidConfig(format!("miner {j}: {e}")))?;
        }
        self.reward.validate()?;
        let (zero, one) = (T::zero(), T::one());
        if !(self.tau0 > zero && self.tau0 < one) {
            return Err(GameError::InvalidConfig("tau0 must lie in (0, 1)".into()));
        }
        if !(self.epsilon > zero && self.epsilon < one) {
            return Err(GameError::InvalidConfig("epsilon must lie in (0, 1)".into()));
        }
        if !(self.kappa > zero) {
            return Err(GameError::InvalidConfig("kappa must be positive".into()));
        }
        Ok(())
    }

    /// Initial profile: every miner at `max(tau0, initial_alpha)`, capped at 1.
    pub fn initial_profile(&self) -> StrategyProfile<T> {
        let a = self.initial_alpha.max(self.tau0).min(T::one());
        StrategyProfile::new(vec![a; self.miners.len()])
    }
}

/// Vector of investment coefficients, one per miner.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrategyProfile<T> {
    pub alphas: Vec<T>,
}

impl<T: Scalar> StrategyProfile<T> {
    pub fn new(alphas: Vec<T>) -> Self {
        Self { alphas }
    }

    /// Builds a profile and checks `tau0 <= alpha_j <= 1` for every entry.
    pub fn checked(alphas: Vec<T>, tau0: T) -> Result<Self> {
        let p = Self { alphas };
        p.validate(tau0)?;
        Ok(p)
    }

    pub fn validate(&self, tau0: T) -> Result<()> {
        for (j, &a) in self.alphas.iter().enumerate() {
            if !(a >= tau0 && a <= T::one()) {
                return Err(GameError::Domain(format!(
                    "alpha[{j}] = {a} outside [{tau0}, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.alphas
    }

    /// `sum_{l != j} alpha_l x_l`.
    pub fn others_load(&self, j: usize, resources: &[T]) -> T {
        self.alphas
            .iter()
            .zip(resources)
            .enumerate()
            .filter(|(l, _)| *l != j)
            .fold(T::zero(), |acc, (_, (&a, &x))| acc + a * x)
    }

    /// `sum_k alpha_k x_k`.
    pub fn total_load(&self, resources: &[T]) -> T {
        self.alphas
            .iter()
            .zip(resources)
            .fold(T::zero(), |acc, (&a, &x)| acc + a * x)
    }
}

impl<T> From<Vec<T>> for StrategyProfile<T> {
    fn from(alphas: Vec<T>) -> Self {
        Self { alphas }
    }
}

/// Everything one miner needs to know about its rivals: their aggregate
/// nominal load and the total reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Context<T> {
    /// `sum_{l != j} alpha_l (x_hat_l + mu_l)`.
    pub others_load: T,
    /// `fixed + unit * count`.
    pub reward: T,
}

impl<T: Scalar> Context<T> {
    pub fn new(others_load: T, reward: T) -> Self {
        Self { others_load, reward }
    }

    /// Context of miner `j` against the rest of `profile` at nominal resources.
    pub fn for_miner(j: usize, profile: &StrategyProfile<T>, config: &GameConfig<T>) -> Result<Self> {
        config.miner(j)?;
        if profile.len() != config.num_miners() {
            return Err(GameError::Domain(format!(
                "profile has {} entries for {} miners",
                profile.len(),
                config.num_miners()
            )));
        }
        let load = profile.others_load(j, &config.nominal_resources());
        if !(load > T::zero()) {
            return Err(GameError::Domain("rivals commit no resource".into()));
        }
        Ok(Self::new(load, config.reward.total()))
    }

    /// `B = -R + c * others_load`.
    pub fn b_term(&self, cost: T) -> T {
        -self.reward + cost * self.others_load
    }

    /// Utility of a miner committing `alpha` of a realized resource `x`.
    pub fn utility(&self, alpha: T, x: T, cost: T) -> T {
        let own = alpha * x;
        self.reward * own / (own + self.others_load) - cost * own
    }
}

fn check_inputs<T: Scalar>(j: usize, profile: &StrategyProfile<T>, resources: &[T]) -> Result<T> {
    let n = profile.len();
    if j >= n {
        return Err(GameError::IndexOutOfRange { index: j, len: n });
    }
    if resources.len() != n {
        return Err(GameError::Domain(format!(
            "{} resources for {} miners",
            resources.len(),
            n
        )));
    }
    if let Some(x) = resources.iter().find(|&&x| !(x > T::zero())) {
        return Err(GameError::Domain(format!("nonpositive resource {x}")));
    }
    if let Some(a) = profile.alphas.iter().find(|&&a| !(a >= T::zero())) {
        return Err(GameError::Domain(format!("negative investment coefficient {a}")));
    }
    let total = profile.total_load(resources);
    if !(total > T::zero()) {
        return Err(GameError::Domain("total committed resource is zero".into()));
    }
    Ok(total)
}

/// Share of the total committed hash power held by miner `j`.
pub fn hash_power<T: Scalar>(j: usize, profile: &StrategyProfile<T>, resources: &[T]) -> Result<T> {
    let total = check_inputs(j, profile, resources)?;
    Ok(profile.alphas[j] * resources[j] / total)
}

/// `R h_j - c_j alpha_j x_j`. Negative values are legitimate.
pub fn utility<T: Scalar>(
    j: usize,
    profile: &StrategyProfile<T>,
    resources: &[T],
    reward: &RewardModel<T>,
    cost: T,
) -> Result<T> {
    let h = hash_power(j, profile, resources)?;
    Ok(reward.total() * h - cost * profile.alphas[j] * resources[j])
}

/// Partial derivative of [`utility`] with respect to `alpha_j`.
pub fn utility_gradient<T: Scalar>(
    j: usize,
    profile: &StrategyProfile<T>,
    resources: &[T],
    reward: &RewardModel<T>,
    cost: T,
) -> Result<T> {
    let total = check_inputs(j, profile, resources)?;
    let others = profile.others_load(j, resources);
    let x = resources[j];
    Ok(x * reward.total() * others / (total * total) - cost * x)
}

/// Second partial derivative of [`utility`] with respect to `alpha_j`;
/// strictly negative whenever some rival commits resource.
pub fn utility_second_derivative<T: Scalar>(
    j: usize,
    profile: &StrategyProfile<T>,
    resources: &[T],
    reward: &RewardModel<T>,
    _cost: T,
) -> Result<T> {
    let total = check_inputs(j, profile, resources)?;
    let others = profile.others_load(j, resources);
    let x = resources[j];
    Ok(-T::of(2.0) * x * x * reward.total() * others / (total * total * total))
}
