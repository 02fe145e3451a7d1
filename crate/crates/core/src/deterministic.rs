//! The mining game without resource uncertainty: closed-form best response
//! and Nash equilibrium. Resources are taken at their nominal values.

use crate::error::{GameError, Result};
use crate::model::{utility, Context, GameConfig, StrategyProfile};
use crate::scalar::Scalar;

/// Nash equilibrium of the deterministic game.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicEquilibrium<T> {
    pub profile: StrategyProfile<T>,
    /// Per-miner utility at the equilibrium.
    pub utilities: Vec<T>,
    /// `true` where `alpha_j` lies strictly inside `(tau0, 1)`.
    pub interior_flags: Vec<bool>,
    /// `true` when the stationarity closed form was valid for every miner.
    pub from_closed_form: bool,
    /// Best-response sweeps spent when the closed form was not usable.
    pub sweeps: usize,
}

/// Unclipped stationary point `(zeta - C) / x` with `zeta = sqrt(R C / c)`.
pub fn interior_best_response<T: Scalar>(others_load: T, own_resource: T, cost: T, reward: T) -> T {
    let zeta = (reward * others_load / cost).sqrt();
    (zeta - others_load) / own_resource
}

/// Best response of a miner facing rivals with aggregate load `ctx.others_load`.
pub fn best_response_in<T: Scalar>(ctx: &Context<T>, own_resource: T, cost: T, tau0: T) -> Result<T> {
    if !(ctx.others_load > T::zero()) {
        return Err(GameError::Domain("rivals commit no resource".into()));
    }
    let a = interior_best_response(ctx.others_load, own_resource, cost, ctx.reward);
    Ok(a.max(tau0).min(T::one()))
}

/// Best response of miner `j` to the other entries of `profile`
/// (`profile.alphas[j]` is ignored).
pub fn best_response<T: Scalar>(j: usize, profile: &StrategyProfile<T>, config: &GameConfig<T>) -> Result<T> {
    let ctx = Context::for_miner(j, profile, config)?;
    let m = config.miner(j)?;
    best_response_in(&ctx, m.nominal(), m.cost, config.tau0)
}

/// Gauss-Seidel best-response iteration in ascending miner order until the
/// largest per-sweep change is at most `tol`. Returns the profile, the number
/// of sweeps and whether the tolerance was met.
pub fn best_response_iteration<T: Scalar>(
    config: &GameConfig<T>,
    start: StrategyProfile<T>,
    tol: T,
    max_sweeps: usize,
) -> Result<(StrategyProfile<T>, usize, bool)> {
    config.validate()?;
    let mut profile = start;
    for sweep in 1..=max_sweeps {
        let mut change = T::zero();
        for j in 0..config.num_miners() {
            let a = best_response(j, &profile, config)?;
            change = change.max((a - profile.alphas[j]).abs());
            profile.alphas[j] = a;
        }
        if change <= tol {
            return Ok((profile, sweep, true));
        }
    }
    Ok((profile, max_sweeps, false))
}

/// Stationary point of every miner simultaneously, ignoring the box.
///
/// Summing the first-order conditions gives the total load
/// `S = (J - 1) R / sum_j c_j`, and each miner then sits at
/// `alpha_j x_j = S - c_j S^2 / R`.
pub fn unconstrained_stationary_point<T: Scalar>(config: &GameConfig<T>) -> Vec<T> {
    let r = config.reward.total();
    let j = T::of(config.num_miners() as f64);
    let cost_sum = config.miners.iter().fold(T::zero(), |acc, m| acc + m.cost);
    let s = (j - T::one()) * r / cost_sum;
    config
        .miners
        .iter()
        .map(|m| (s / m.nominal()) * (T::one() - m.cost * s / r))
        .collect()
}

/// Nash equilibrium of the deterministic game.
///
/// Uses the closed form when it lands inside `[tau0, 1]` for every miner and
/// falls back to best-response iteration otherwise.
pub fn closed_form_equilibrium<T: Scalar>(config: &GameConfig<T>) -> Result<DeterministicEquilibrium<T>> {
    config.validate()?;
    let tau0 = config.tau0;
    let stationary = unconstrained_stationary_point(config);
    let inside = stationary.iter().all(|&a| a >= tau0 && a <= T::one());

    let (profile, from_closed_form, sweeps) = if inside {
        (StrategyProfile::new(stationary), true, 0)
    } else {
        let (p, sweeps, converged) =
            best_response_iteration(config, config.initial_profile(), T::epsilon() * T::of(16.0), 10_000)?;
        if !converged {
            return Err(GameError::Solver(
                "best-response iteration did not reach a fixed point".into(),
            ));
        }
        (p, false, sweeps)
    };

    let resources = config.nominal_resources();
    let utilities = (0..config.num_miners())
        .map(|j| utility(j, &profile, &resources, &config.reward, config.miners[j].cost))
        .collect::<Result<Vec<_>>>()?;
    let interior_flags = profile.alphas.iter().map(|&a| a > tau0 && a < T::one()).collect();

    Ok(DeterministicEquilibrium {
        profile,
        utilities,
        interior_flags,
        from_closed_form,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MinerParams, RewardModel};
    use approx::assert_relative_eq;

    fn config(x: f64, j: usize, reward: f64, tau0: f64) -> GameConfig<f64> {
        let miners = (0..j)
            .map(|_| MinerParams::new(x, 0.0, 0.0, 60.0, 10.0, 100.0).unwrap())
            .collect();
        GameConfig::new(miners, RewardModel::new(reward, 0.0, 0.0).unwrap(), tau0, 0.1).unwrap()
    }

    #[test]
    fn interior_response() {
        let c = config(30.0, 5, 8000.0, 0.5);
        let p = StrategyProfile::new(vec![0.5; 5]);
        let a = best_response(0, &p, &c).unwrap();
        assert_relative_eq!(a, ((8000.0_f64 * 60.0 / 60.0).sqrt() - 60.0) / 30.0, epsilon = 1e-12);
        assert!((a - 0.9814).abs() < 1e-4);
    }

    #[test]
    fn clipped_response() {
        let c = config(55.0, 5, 8000.0, 0.5);
        let p = StrategyProfile::new(vec![0.5; 5]);
        let raw = interior_best_response(110.0_f64, 55.0, 60.0, 8000.0);
        assert!((raw - 0.20193).abs() < 1e-4);
        assert_eq!(best_response(0, &p, &c).unwrap(), 0.5);
    }

    #[test]
    fn table_one_homogeneous_is_boundary() {
        let c = GameConfig::<f64>::homogeneous(5, 55.0, 10.0);
        let stationary = unconstrained_stationary_point(&c);
        assert!((stationary[0] - 0.3879).abs() < 1e-4);
        let eq = closed_form_equilibrium(&c).unwrap();
        assert!(!eq.from_closed_form);
        assert_eq!(eq.profile.alphas, vec![0.5; 5]);
        assert!(eq.interior_flags.iter().all(|f| !f));
    }

    #[test]
    fn symmetric_two_miner_interior() {
        let c = config(40.0, 2, 8000.0, 0.01);
        let eq = closed_form_equilibrium(&c).unwrap();
        assert!(eq.from_closed_form);
        assert_eq!(eq.profile.alphas[0], eq.profile.alphas[1]);
        assert!(eq.interior_flags.iter().all(|&f| f));
    }

    #[test]
    fn degenerate_rivals_rejected() {
        let ctx = Context::new(0.0_f64, 8000.0);
        assert!(best_response_in(&ctx, 50.0, 60.0, 0.5).is_err());
    }
}
