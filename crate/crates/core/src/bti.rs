//! Gaussian resource uncertainty handled with a Bernstein-type inequality.
//!
//! Writing the realized resource as `x = m + sigma e` with `e` standard
//! normal turns the utility constraint into `f(e) = A e^2 + 2 b e + D >= 0`.
//! The chance constraint `P(f(e) >= 0) >= 1 - eps` is then implied by the
//! deterministic inequality
//!
//! ```text
//! A - sqrt(-2 ln eps) sqrt(A^2 + 2 b^2) + ln(eps) max(0, -A) + D >= 0.
//! ```

use crate::cvar::{maximize_slack, threshold_bracket, StrategyStep};
use crate::error::{GameError, Result};
use crate::model::{Context, GameConfig, MinerParams, StrategyProfile};
use crate::options::SolverOptions;
use crate::scalar::Scalar;
use crate::search::bisect_max;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtiCoefficients<T> {
    /// `-c alpha^2 sigma^2`.
    pub a: T,
    pub b: T,
    /// `-R + c C`.
    pub big_b: T,
    pub d: T,
    /// Tight second-order-cone bound `|(A, sqrt(2) b)|`.
    pub upsilon: T,
    /// Tight positive-part bound `max(0, -A)`.
    pub omega: T,
}

impl<T: Scalar> BtiCoefficients<T> {
    pub fn new(alpha: T, u_min: T, ctx: &Context<T>, miner: &MinerParams<T>) -> Self {
        Self::with_quadratic(alpha, -miner.cost * alpha * alpha, u_min, ctx, miner)
    }

    /// Coefficients with `t` standing in for `-c alpha^2`.
    pub fn with_quadratic(alpha: T, t: T, u_min: T, ctx: &Context<T>, miner: &MinerParams<T>) -> Self {
        let sigma = miner.sigma();
        let m = miner.nominal();
        let big_b = ctx.b_term(miner.cost);
        let half = T::of(0.5);
        let a = t * miner.sigma2;
        let b = sigma * (t * m - half * (u_min + big_b) * alpha);
        let d = t * m * m - (u_min + big_b) * alpha * m - u_min * ctx.others_load;
        Self {
            a,
            b,
            big_b,
            d,
            upsilon: (a * a + T::of(2.0) * b * b).sqrt(),
            omega: (-a).max(T::zero()),
        }
    }

    /// `f(e) = A e^2 + 2 b e + D`.
    pub fn f(&self, e: T) -> T {
        (self.a * e + T::of(2.0) * self.b) * e + self.d
    }
}

/// Left-hand side of the deterministic Bernstein-type constraint; a value
/// `>= 0` certifies the Gaussian chance constraint.
pub fn bti_constraint_value<T: Scalar>(coeffs: &BtiCoefficients<T>, epsilon: T) -> T {
    let ln_eps = epsilon.ln();
    let norm = (coeffs.a * coeffs.a + T::of(2.0) * coeffs.b * coeffs.b).sqrt();
    coeffs.a - (-T::of(2.0) * ln_eps).sqrt() * norm + ln_eps * (-coeffs.a).max(T::zero()) + coeffs.d
}

/// Constraint slack with `t` in place of `-c alpha^2`.
pub fn relaxed_slack<T: Scalar>(alpha: T, t: T, u_min: T, ctx: &Context<T>, miner: &MinerParams<T>, epsilon: T) -> T {
    bti_constraint_value(&BtiCoefficients::with_quadratic(alpha, t, u_min, ctx, miner), epsilon)
}

fn check_inputs<T: Scalar>(alpha: T, miner: &MinerParams<T>, epsilon: T) -> Result<()> {
    if !(miner.sigma2 > T::zero()) {
        return Err(GameError::Domain("Gaussian solver needs sigma2 > 0".into()));
    }
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(GameError::Domain("epsilon must lie in (0, 1)".into()));
    }
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(GameError::Domain(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// Largest threshold satisfying the Bernstein-type constraint at fixed `alpha`.
///
/// The constraint value is concave in the threshold, so its feasible set is
/// an interval and bisection is exact up to `opts.bisection_tol`.
pub fn subproblem_threshold_gaussian<T: Scalar>(
    alpha: T,
    ctx: &Context<T>,
    miner: &MinerParams<T>,
    epsilon: T,
    opts: &SolverOptions<T>,
) -> Result<T> {
    check_inputs(alpha, miner, epsilon)?;
    let probe = |u: T| (bti_constraint_value(&BtiCoefficients::new(alpha, u, ctx, miner), epsilon) >= T::zero()).then_some(());
    let (lo, ()) = threshold_bracket(ctx.reward, miner, probe)?;
    Ok(bisect_max(lo, ctx.reward, opts.bisection_tol, (), probe).0)
}

/// Strategy step at a fixed threshold: maximizes the constraint slack over
/// `alpha` in `[tau0, 1]` with `t = -c alpha^2` tight.
pub fn subproblem_strategy_gaussian<T: Scalar>(
    u_min: T,
    alpha_in: T,
    ctx: &Context<T>,
    miner: &MinerParams<T>,
    epsilon: T,
    tau0: T,
    opts: &SolverOptions<T>,
) -> StrategyStep<T> {
    let scale = BtiCoefficients::new(alpha_in, u_min, ctx, miner).d;
    maximize_slack(alpha_in, tau0, opts, scale, |a| {
        relaxed_slack(a, -miner.cost * a * a, u_min, ctx, miner, epsilon)
    })
}

/// Best response of one miner under Gaussian uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianResponse<T> {
    pub alpha: T,
    pub u_min: T,
    pub iterations: usize,
    pub u_history: Vec<T>,
}

pub fn robust_best_response_gaussian_in<T: Scalar>(
    ctx: &Context<T>,
    miner: &MinerParams<T>,
    tau0: T,
    epsilon: T,
    alpha_start: T,
    opts: &SolverOptions<T>,
) -> Result<GaussianResponse<T>> {
    let mut alpha = alpha_start.max(tau0).min(T::one());
    let mut u = subproblem_threshold_gaussian(alpha, ctx, miner, epsilon, opts)?;
    let mut history = vec![u];
    for it in 1..=opts.ao_max_iterations {
        let step = subproblem_strategy_gaussian(u, alpha, ctx, miner, epsilon, tau0, opts);
        let mut u_new = subproblem_threshold_gaussian(step.alpha, ctx, miner, epsilon, opts)?;
        if u_new < u && step.feasible {
            u_new = u;
        }
        let delta = (u_new - u).abs() + (step.alpha - alpha).abs();
        alpha = step.alpha;
        u = u_new;
        history.push(u);
        if delta <= opts.ao_tol {
            return Ok(GaussianResponse {
                alpha,
                u_min: u,
                iterations: it,
                u_history: history,
            });
        }
    }
    Err(GameError::NotConverged {
        iterations: opts.ao_max_iterations,
        alpha: alpha.to_f64_lossy(),
        u_min: u.to_f64_lossy(),
    })
}

pub fn robust_best_response_gaussian<T: Scalar>(
    j: usize,
    profile: &StrategyProfile<T>,
    config: &GameConfig<T>,
    opts: &SolverOptions<T>,
) -> Result<GaussianResponse<T>> {
    let ctx = Context::for_miner(j, profile, config)?;
    let miner = config.miner(j)?;
    robust_best_response_gaussian_in(&ctx, miner, config.tau0, config.epsilon, profile.alphas[j], opts)
}
