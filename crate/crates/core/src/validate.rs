//! Monte Carlo robustness checks of equilibrium strategies.
//!
//! Resource errors are drawn from distributions that all share the
//! configured mean and variance. Each draw uses a ChaCha20 stream, and
//! per-miner streams come from [`stream_seed`], so a batch depends only on
//! `(seed, miner, distribution)` and never on evaluation order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution as _, Normal, Poisson, Uniform};

use crate::cvar::LossCoefficients;
use crate::equilibrium::EquilibriumResult;
use crate::error::{GameError, Result};
use crate::model::{Context, GameConfig, StrategyProfile};
use crate::scalar::Scalar;

/// Number of histogram bins in a [`ViolationReport`].
pub const HISTOGRAM_BINS: usize = 40;

/// Smallest realized resource fed into the utility.
const RESOURCE_FLOOR: f64 = 1e-9;

/// Moment-matched resource-error distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// `N(mu, sigma^2)`.
    Gaussian,
    /// `U(mu - sqrt(3) sigma, mu + sqrt(3) sigma)`.
    Uniform,
    /// `Poisson(sigma^2) - sigma^2 + mu`.
    PoissonShifted,
    /// `mu + sigma sqrt((1-p)/p)` with probability `p`, else
    /// `mu - sigma sqrt(p/(1-p))`.
    TwoPoint(f64),
}

impl Distribution {
    /// The three families used in the robustness histograms.
    pub const STANDARD: [Distribution; 3] = [Distribution::Gaussian, Distribution::Uniform, Distribution::PoissonShifted];

    pub fn tag(&self) -> String {
        match self {
            Distribution::Gaussian => "gaussian".into(),
            Distribution::Uniform => "uniform".into(),
            Distribution::PoissonShifted => "poisson".into(),
            Distribution::TwoPoint(p) => format!("two_point:{p}"),
        }
    }

    fn stream_id(&self) -> u64 {
        match self {
            Distribution::Gaussian => 1,
            Distribution::Uniform => 2,
            Distribution::PoissonShifted => 3,
            Distribution::TwoPoint(p) => 4 ^ p.to_bits().rotate_left(8),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for Distribution {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "normal" => Ok(Distribution::Gaussian),
            "uniform" => Ok(Distribution::Uniform),
            "poisson" | "poisson_shifted" => Ok(Distribution::PoissonShifted),
            other => {
                let p = other
                    .strip_prefix("two_point:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| GameError::InvalidConfig(format!("unknown distribution `{other}`")))?;
                Ok(Distribution::TwoPoint(p))
            }
        }
    }
}

/// Seeded draws of the resource error.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub distribution: Distribution,
    pub mu: f64,
    pub sigma2: f64,
    pub seed: u64,
    pub draws: Vec<f64>,
}

impl SampleBatch {
    pub fn mean(&self) -> f64 {
        self.draws.iter().sum::<f64>() / self.draws.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.draws.len() as f64;
        let m = self.mean();
        self.draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (n - 1.0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream for `(seed, miner, distribution)`.
pub fn stream_seed(seed: u64, miner: usize, distribution: Distribution) -> u64 {
    let h = splitmix64(seed);
    let h = splitmix64(h ^ miner as u64);
    splitmix64(h ^ distribution.stream_id())
}

/// Draws `n` resource errors with mean `mu` and variance `sigma2`.
pub fn sample_uncertainty(distribution: Distribution, mu: f64, sigma2: f64, n: usize, seed: u64) -> Result<SampleBatch> {
    if !(sigma2 > 0.0) {
        return Err(GameError::Domain("sampling needs sigma2 > 0".into()));
    }
    if n == 0 {
        return Err(GameError::Domain("sample count must be positive".into()));
    }
    let sigma = sigma2.sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let invalid = |e: &dyn fmt::Display| GameError::Domain(e.to_string());
    let draws: Vec<f64> = match distribution {
        Distribution::Gaussian => {
            let d = Normal::new(mu, sigma).map_err(|e| invalid(&e))?;
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
        Distribution::Uniform => {
            let half = 3f64.sqrt() * sigma;
            let d = Uniform::new(mu - half, mu + half).map_err(|e| invalid(&e))?;
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
        Distribution::PoissonShifted => {
            let d = Poisson::new(sigma2).map_err(|e| invalid(&e))?;
            (0..n).map(|_| d.sample(&mut rng) - sigma2 + mu).collect()
        }
        Distribution::TwoPoint(p) => {
            if !(p > 0.0 && p < 1.0) {
                return Err(GameError::Domain(format!("two-point probability {p} outside (0, 1)")));
            }
            let (hi, lo) = two_point_atoms(mu, sigma, p);
            (0..n).map(|_| if rng.random::<f64>() < p { hi } else { lo }).collect()
        }
    };
    Ok(SampleBatch {
        distribution,
        mu,
        sigma2,
        seed,
        draws,
    })
}

/// Atoms `(high, low)` of the two-point law with mean `mu`, standard
/// deviation `sigma` and mass `p` on the high atom.
pub fn two_point_atoms(mu: f64, sigma: f64, p: f64) -> (f64, f64) {
    (mu + sigma * ((1.0 - p) / p).sqrt(), mu - sigma * (p / (1.0 - p)).sqrt())
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// `bins` equal-width bins spanning the observed range. A degenerate
    /// range is widened to one unit around the value.
    pub fn from_values(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let (mut lo, mut hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if values.is_empty() {
            (lo, hi) = (0.0, 1.0);
        } else if hi <= lo {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins)
            .map(|k| if k == bins { hi } else { lo + width * k as f64 })
            .collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = (((v - lo) / width).floor() as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self { edges, counts }
    }
}

/// Empirical check of one miner's utility threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub miner: usize,
    pub distribution: Distribution,
    pub n_samples: usize,
    /// Draws with utility strictly below the threshold.
    pub n_violations: usize,
    pub rate: f64,
    pub epsilon: f64,
    /// `rate <= epsilon + binomial_slack(epsilon, n_samples)`.
    pub pass: bool,
    pub u_min: f64,
    pub mean_utility: f64,
    pub histogram: Histogram,
}

/// Three binomial standard errors at level `epsilon`.
pub fn binomial_slack(epsilon: f64, n: usize) -> f64 {
    3.0 * (epsilon * (1.0 - epsilon) / n as f64).sqrt()
}

/// Per-miner strategies and utility thresholds to be checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub profile: StrategyProfile<T>,
    pub u_mins: Vec<T>,
}

impl<T: Scalar> Solution<T> {
    pub fn new(profile: StrategyProfile<T>, u_mins: Vec<T>) -> Self {
        Self { profile, u_mins }
    }
}

impl<T: Scalar> From<&EquilibriumResult<T>> for Solution<T> {
    fn from(r: &EquilibriumResult<T>) -> Self {
        Self {
            profile: r.profile.clone(),
            u_mins: r.thresholds().to_vec(),
        }
    }
}

/// Evaluates miner `j`'s utility at every draw (own resource `x_hat + draw`,
/// rivals nominal) and counts draws falling below its threshold.
///
/// With `clamp` set the realized resource is clipped to `[x_min, x_max]`.
pub fn empirical_violation<T: Scalar>(
    j: usize,
    solution: &Solution<T>,
    config: &GameConfig<T>,
    batch: &SampleBatch,
    clamp: bool,
) -> Result<ViolationReport> {
    let miner = config.miner(j)?;
    let ctx = Context::for_miner(j, &solution.profile, config)?;
    let alpha = solution.profile.alphas[j];
    let u_min = *solution.u_mins.get(j).ok_or(GameError::IndexOutOfRange {
        index: j,
        len: solution.u_mins.len(),
    })?;
    let x_hat = miner.x_hat.to_f64_lossy();
    let (lo, hi) = if clamp {
        (miner.x_min.to_f64_lossy().max(RESOURCE_FLOOR), miner.x_max.to_f64_lossy())
    } else {
        (RESOURCE_FLOOR, f64::INFINITY)
    };

    let utilities: Vec<f64> = batch
        .draws
        .iter()
        .map(|d| {
            let x = (x_hat + d).max(lo).min(hi);
            ctx.utility(alpha, T::of(x), miner.cost).to_f64_lossy()
        })
        .collect();
    let u_min = u_min.to_f64_lossy();
    let n_violations = utilities.iter().filter(|&&u| u < u_min).count();
    let n = utilities.len();
    let rate = n_violations as f64 / n as f64;
    let epsilon = config.epsilon.to_f64_lossy();
    Ok(ViolationReport {
        miner: j,
        distribution: batch.distribution,
        n_samples: n,
        n_violations,
        rate,
        epsilon,
        pass: rate <= epsilon + binomial_slack(epsilon, n),
        u_min,
        mean_utility: utilities.iter().sum::<f64>() / n as f64,
        histogram: Histogram::from_values(&utilities, HISTOGRAM_BINS),
    })
}

/// Worst violation found over a family of two-point distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCaseProbe {
    pub max_rate: f64,
    pub miner: usize,
    pub p: f64,
}

/// `k / (n + 1)` for `k = 1..=n`.
pub fn p_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
}

/// Exact probability `P(L(x) > 0)` under every two-point law with the
/// configured moments, maximized over miners and `p_values`.
pub fn discrete_worstcase_violation<T: Scalar>(
    solution: &Solution<T>,
    config: &GameConfig<T>,
    p_values: &[f64],
) -> Result<WorstCaseProbe> {
    let mut worst = WorstCaseProbe {
        max_rate: 0.0,
        miner: 0,
        p: f64::NAN,
    };
    for (j, miner) in config.miners.iter().enumerate() {
        let ctx = Context::for_miner(j, &solution.profile, config)?;
        let loss = LossCoefficients::new(solution.profile.alphas[j], solution.u_mins[j], &ctx, miner.cost);
        let mean = miner.nominal().to_f64_lossy();
        let sigma = miner.sigma().to_f64_lossy();
        for &p in p_values {
            if !(p > 0.0 && p < 1.0) {
                return Err(GameError::Domain(format!("grid probability {p} outside (0, 1)")));
            }
            let (hi, lo) = two_point_atoms(mean, sigma, p);
            let violated = |x: f64| loss.eval(T::of(x)) > T::zero();
            let rate = if violated(hi) { p } else { 0.0 } + if violated(lo) { 1.0 - p } else { 0.0 };
            if rate > worst.max_rate {
                worst = WorstCaseProbe { max_rate: rate, miner: j, p };
            }
        }
    }
    Ok(worst)
}
