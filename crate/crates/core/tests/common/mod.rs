//! Reference computations written independently of the library solvers.
#![allow(dead_code)]

use minegame_core::{GameConfigF64, MinerParamsF64, RewardModelF64};
use rand::Rng;

/// `P(L(X) > 0)` maximized over every law with mean `m` and variance `s2`,
/// where `L` is the utility-shortfall quadratic in the realized resource.
///
/// The violation set is the complement of the open root interval `(r1, r2)`
/// of `L`, and the worst-case mass outside an interval containing the mean is
/// known in closed form (one-sided Chebyshev near an edge, a three-point law
/// otherwise).
pub fn worst_case_violation(u: f64, alpha: f64, others: f64, reward: f64, cost: f64, m: f64, s2: f64) -> f64 {
    let a2 = cost * alpha * alpha;
    let a1 = (u - reward + cost * others) * alpha;
    let a0 = u * others;
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return 1.0;
    }
    let r1 = (-a1 - disc.sqrt()) / (2.0 * a2);
    let r2 = (-a1 + disc.sqrt()) / (2.0 * a2);
    if !(r1 < m && m < r2) {
        return 1.0;
    }
    let (d1, d2) = (m - r1, r2 - m);
    if s2 >= d1 * d2 {
        return 1.0;
    }
    let (near, far) = (d1.min(d2), d1.max(d2));
    if s2 >= near * (far - near) / 2.0 {
        1.0 - 4.0 * (d1 * d2 - s2) / ((d1 + d2) * (d1 + d2))
    } else {
        s2 / (s2 + near * near)
    }
}

/// Largest threshold whose worst-case violation probability is at most `eps`.
pub fn cvar_threshold_oracle(alpha: f64, others: f64, reward: f64, miner: &MinerParamsF64, eps: f64) -> f64 {
    let m = miner.x_hat + miner.mu;
    let (mut lo, mut hi) = (-reward - miner.cost * miner.x_max.max(m + 10.0 * miner.sigma2.sqrt()), reward);
    assert!(worst_case_violation(lo, alpha, others, reward, miner.cost, m, miner.sigma2) <= eps);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if worst_case_violation(mid, alpha, others, reward, miner.cost, m, miner.sigma2) <= eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Bernstein-type constraint value, written out from scratch.
pub fn bti_value(u: f64, alpha: f64, others: f64, reward: f64, miner: &MinerParamsF64, eps: f64) -> f64 {
    let c = miner.cost;
    let s = miner.sigma2.sqrt();
    let m = miner.x_hat + miner.mu;
    let bb = u - reward + c * others;
    let a = -c * alpha * alpha * miner.sigma2;
    let b = -s * (c * alpha * alpha * m + 0.5 * bb * alpha);
    let d = -(c * alpha * alpha * m * m + bb * alpha * m + u * others);
    let l = eps.ln();
    a - (-2.0 * l).sqrt() * (a * a + 2.0 * b * b).sqrt() + l * (-a).max(0.0) + d
}

pub fn bti_threshold_oracle(alpha: f64, others: f64, reward: f64, miner: &MinerParamsF64, eps: f64) -> f64 {
    let (mut lo, mut hi) = (-1e9, reward);
    assert!(bti_value(lo, alpha, others, reward, miner, eps) >= 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bti_value(mid, alpha, others, reward, miner, eps) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Dense grid over `[tau0, 1]` followed by a golden refinement of the best cell.
pub fn grid_argmax(tau0: f64, points: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let at = |k: usize| (tau0 + (1.0 - tau0) * k as f64 / (points - 1) as f64).min(1.0);
    let (mut bk, mut bv) = (0, f64::NEG_INFINITY);
    for k in 0..points {
        let v = f(at(k));
        if v > bv {
            (bk, bv) = (k, v);
        }
    }
    let (mut a, mut b) = (at(bk.saturating_sub(1)), at((bk + 1).min(points - 1)));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while b - a > 1e-9 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x);
    if v > bv { (x, v) } else { (at(bk), bv) }
}

/// Plain nominal utility `R a x / (a x + C) - c a x`.
pub fn utility(alpha: f64, x: f64, others: f64, reward: f64, cost: f64) -> f64 {
    reward * alpha * x / (alpha * x + others) - cost * alpha * x
}

pub fn table_one_reward() -> RewardModelF64 {
    RewardModelF64::table_one()
}

/// Random config whose deterministic equilibrium lies strictly inside the box.
pub fn random_interior_config(rng: &mut impl Rng) -> GameConfigF64 {
    loop {
        let j = rng.random_range(2..=8);
        let reward = rng.random_range(2000.0..20000.0);
        let costs: Vec<f64> = (0..j).map(|_| rng.random_range(30.0..90.0)).collect();
        let sum_c: f64 = costs.iter().sum();
        let s = (j as f64 - 1.0) * reward / sum_c;
        let loads: Vec<f64> = costs.iter().map(|c| s - c * s * s / reward).collect();
        if loads.iter().any(|&l| l <= 0.0) {
            continue;
        }
        // Pick resources so every alpha lands in (0.3, 0.95) with tau0 = 0.1.
        let alphas: Vec<f64> = (0..j).map(|_| rng.random_range(0.3..0.95)).collect();
        let miners: Vec<MinerParamsF64> = loads
            .iter()
            .zip(&alphas)
            .zip(&costs)
            .map(|((l, a), c)| {
                let x = l / a;
                MinerParamsF64::new(x, 0.0, 100.0, *c, 0.1 * x, 10.0 * x).unwrap()
            })
            .collect();
        let reward = RewardModelF64::new(reward, 0.0, 0.0).unwrap();
        return GameConfigF64::new(miners, reward, 0.1, 0.1).unwrap();
    }
}
