//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line, even when run captured.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{bti_threshold_oracle, cvar_threshold_oracle, grid_argmax, random_interior_config, utility};
use minegame_cli::run::SweepRow;
use minegame_cli::{run_sweep, Axis, Scenario};
use minegame_core::bti::robust_best_response_gaussian_in;
use minegame_core::cvar::robust_best_response_in;
use minegame_core::deterministic::{best_response, best_response_iteration, closed_form_equilibrium};
use minegame_core::equilibrium::mode_best_response;
use minegame_core::validate::{
    discrete_worstcase_violation, empirical_violation, p_grid, sample_uncertainty, stream_seed, Distribution, Solution,
};
use minegame_core::{
    solve_equilibrium, ContextF64, EquilibriumResultF64, GameConfigF64, MinerParamsF64, SolverMode, SolverOptionsF64,
    StrategyProfileF64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn table_one() -> GameConfigF64 {
    GameConfigF64::homogeneous(5, 55.0, 10.0)
}

fn c1_deterministic_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_alpha: f64 = 0.0;
    let mut worst_gain = f64::NEG_INFINITY;
    for _ in 0..50 {
        let cfg = random_interior_config(&mut rng);
        let eq = closed_form_equilibrium(&cfg).map_err(|e| e.to_string())?;
        ensure!(eq.from_closed_form, "closed form left the box");
        let (it, _, ok) = best_response_iteration(&cfg, cfg.initial_profile(), 1e-13, 10_000).map_err(|e| e.to_string())?;
        ensure!(ok, "best-response iteration did not converge");
        for (a, b) in eq.profile.alphas.iter().zip(&it.alphas) {
            worst_alpha = worst_alpha.max((a - b).abs());
        }
        let x = cfg.nominal_resources();
        for j in 0..cfg.num_miners() {
            let m = &cfg.miners[j];
            let c = eq.profile.others_load(j, &x);
            let at_eq = utility(eq.profile.alphas[j], m.x_hat, c, cfg.reward.total(), m.cost);
            for k in 0..1000 {
                let a = cfg.tau0 + (1.0 - cfg.tau0) * k as f64 / 999.0;
                worst_gain = worst_gain.max(utility(a, m.x_hat, c, cfg.reward.total(), m.cost) - at_eq);
            }
        }
    }
    ensure!(worst_alpha <= 1e-8, "closed form vs iteration differ by {worst_alpha}");
    ensure!(worst_gain <= 1e-6, "grid deviation gains {worst_gain}");
    Ok(format!("max |dalpha| {worst_alpha:.1e}, max deviation gain {worst_gain:.1e}"))
}

fn c2_boundary_equilibrium() -> Result<String, String> {
    let cfg = table_one();
    let r = solve_equilibrium(&cfg, SolverMode::Deterministic).map_err(|e| e.to_string())?;
    ensure!(r.converged && r.iterations <= 10, "{} sweeps, converged={}", r.iterations, r.converged);
    ensure!(r.profile.alphas.iter().all(|&a| a == 0.5), "profile {:?}", r.profile.alphas);
    let x = cfg.nominal_resources();
    for j in 0..5 {
        let m = &cfg.miners[j];
        let c = r.profile.others_load(j, &x);
        let (a, _) = grid_argmax(cfg.tau0, 100_001, |a| utility(a, m.x_hat, c, cfg.reward.total(), m.cost));
        ensure!((a - 0.5).abs() <= 1e-6, "grid best response of miner {j} is {a}");
    }
    Ok(format!("all alpha* = 0.5 after {} sweep(s)", r.iterations))
}

fn c3_derivatives() -> Result<String, String> {
    use minegame_core::model::{utility as u, utility_gradient, utility_second_derivative};
    use minegame_core::RewardModelF64;
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let p = StrategyProfileF64::new((0..n).map(|_| rng.random_range(0.05..1.0)).collect());
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(10.0..100.0)).collect();
        let r = RewardModelF64::new(rng.random_range(1000.0..20000.0), 0.0, 0.0).unwrap();
        let c = rng.random_range(10.0..100.0);
        let j = rng.random_range(0..n);
        let shifted = |d: f64| {
            let mut q = p.clone();
            q.alphas[j] += d;
            q
        };
        let h = 1e-5;
        let g = utility_gradient(j, &p, &x, &r, c).unwrap();
        let fd = (u(j, &shifted(h), &x, &r, c).unwrap() - u(j, &shifted(-h), &x, &r, c).unwrap()) / (2.0 * h);
        let s = utility_second_derivative(j, &p, &x, &r, c).unwrap();
        let fd2 = (utility_gradient(j, &shifted(h), &x, &r, c).unwrap()
            - utility_gradient(j, &shifted(-h), &x, &r, c).unwrap())
            / (2.0 * h);
        ensure!(s < 0.0, "second derivative {s} not negative");
        worst = worst.max((g - fd).abs() / g.abs().max(1.0)).max((s - fd2).abs() / s.abs().max(1.0));
    }
    ensure!(worst <= 1e-4, "relative error {worst}");
    Ok(format!("max relative error {worst:.1e}"))
}

fn solved(mode: SolverMode) -> Result<EquilibriumResultF64, String> {
    let r = solve_equilibrium(&table_one(), mode).map_err(|e| e.to_string())?;
    ensure!(r.converged, "{mode} equilibrium did not converge");
    Ok(r)
}

fn rates(sol: &Solution<f64>, cfg: &GameConfigF64, d: Distribution) -> Result<Vec<(f64, bool)>, String> {
    (0..cfg.num_miners())
        .map(|j| {
            let batch = sample_uncertainty(d, 0.0, 100.0, 1000, stream_seed(2024, j, d)).map_err(|e| e.to_string())?;
            let r = empirical_violation(j, sol, cfg, &batch, false).map_err(|e| e.to_string())?;
            Ok((r.rate, r.pass))
        })
        .collect()
}

fn c4_cvar_soundness() -> Result<String, String> {
    let cfg = table_one();
    let sol = Solution::from(&solved(SolverMode::DroCvar)?);
    let mut notes = Vec::new();
    for d in Distribution::STANDARD {
        let r = rates(&sol, &cfg, d)?;
        let worst = r.iter().map(|x| x.0).fold(0.0, f64::max);
        ensure!(r.iter().all(|x| x.1), "{d}: max violation rate {worst} above 0.128");
        notes.push(format!("{d} {worst}"));
    }
    let probe = discrete_worstcase_violation(&sol, &cfg, &p_grid(199)).map_err(|e| e.to_string())?;
    ensure!(probe.max_rate <= 0.1, "two-point worst case {probe:?}");
    Ok(format!("max rates: {}; two-point max {}", notes.join(", "), probe.max_rate))
}

fn c5_bti_soundness() -> Result<String, String> {
    let cfg = table_one();
    let bti = solved(SolverMode::GaussianBti)?;
    let cvar = solved(SolverMode::DroCvar)?;
    let sol = Solution::from(&bti);
    let g = rates(&sol, &cfg, Distribution::Gaussian)?;
    ensure!(g.iter().all(|x| x.1), "Gaussian rates {g:?}");
    let u = rates(&sol, &cfg, Distribution::Uniform)?;
    let p = rates(&sol, &cfg, Distribution::PoissonShifted)?;
    for j in 0..5 {
        ensure!(bti.thresholds()[j] >= cvar.thresholds()[j], "miner {j}: BTI threshold below CVaR");
    }
    let max = |v: &[(f64, bool)]| v.iter().map(|x| x.0).fold(0.0, f64::max);
    Ok(format!(
        "gaussian {}, uniform {} (recorded), poisson {} (recorded); U_min bti {} >= cvar {}",
        max(&g),
        max(&u),
        max(&p),
        bti.thresholds()[0],
        cvar.thresholds()[0]
    ))
}

/// Replays every best response of a finished run and checks the inner
/// alternating optimization kept its threshold nondecreasing.
fn replay_ao(cfg: &GameConfigF64, r: &EquilibriumResultF64) -> Result<usize, String> {
    let opts = SolverOptionsF64::default();
    let mut profile = r.initial.alphas.clone();
    let mut loops = 0;
    for rec in &r.trace {
        for j in 0..cfg.num_miners() {
            let p = StrategyProfileF64::new(profile.clone());
            let ctx = ContextF64::for_miner(j, &p, cfg).map_err(|e| e.to_string())?;
            let m = &cfg.miners[j];
            let history = match r.mode {
                SolverMode::DroCvar => robust_best_response_in(&ctx, m, cfg.tau0, cfg.epsilon, profile[j], &opts)
                    .map(|x| x.u_history),
                SolverMode::GaussianBti => {
                    robust_best_response_gaussian_in(&ctx, m, cfg.tau0, cfg.epsilon, profile[j], &opts)
                        .map(|x| x.u_history)
                }
                SolverMode::Deterministic => Ok(Vec::new()),
            }
            .map_err(|e| e.to_string())?;
            ensure!(history.windows(2).all(|w| w[1] >= w[0]), "{} miner {j}: U_min decreased {history:?}", r.mode);
            loops += 1;
            profile[j] = rec.alphas[j];
        }
    }
    Ok(loops)
}

fn c6_convergence() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut loops = 0;
    let mut max_sweeps = 0;
    for k in 0..20 {
        let sigma = rng.random_range(2.0..12.0);
        let mut cfg = if k % 2 == 0 {
            GameConfigF64::homogeneous(rng.random_range(3..=7), rng.random_range(30.0..60.0), sigma)
        } else {
            let n = rng.random_range(3..=7);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(30.0..60.0)).collect();
            GameConfigF64::with_resources(&x, sigma)
        };
        cfg.tau0 = rng.random_range(0.1..0.5);
        cfg.epsilon = rng.random_range(0.05..0.2);
        for mode in SolverMode::ALL {
            let r = solve_equilibrium(&cfg, mode).map_err(|e| e.to_string())?;
            ensure!(r.converged && r.iterations <= 100, "instance {k} {mode}: {} sweeps", r.iterations);
            ensure!(r.ao_failures == 0, "instance {k} {mode}: {} capped AO loops", r.ao_failures);
            max_sweeps = max_sweeps.max(r.iterations);
            loops += replay_ao(&cfg, &r)?;
        }
    }
    Ok(format!("60 runs converged, max {max_sweeps} sweeps; {loops} AO loops monotone"))
}

fn c7_outer_search() -> Result<String, String> {
    let opts = SolverOptionsF64::default();
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x_hat = rng.random_range(30.0..60.0);
        let sigma = rng.random_range(2.0..15.0);
        let miner = MinerParamsF64::new(x_hat, 0.0, sigma * sigma, rng.random_range(40.0..80.0), 10.0, 100.0).unwrap();
        let ctx = ContextF64::new(rng.random_range(40.0..250.0), 8000.0);
        let eps = rng.random_range(0.05..0.3);
        let tau0 = rng.random_range(0.05..0.5);
        let start = 0.35f64.max(tau0);
        let c = robust_best_response_in(&ctx, &miner, tau0, eps, start, &opts).map_err(|e| e.to_string())?;
        let (_, c_best) = grid_argmax(tau0, 1001, |a| cvar_threshold_oracle(a, ctx.others_load, 8000.0, &miner, eps));
        let b = robust_best_response_gaussian_in(&ctx, &miner, tau0, eps, start, &opts).map_err(|e| e.to_string())?;
        let (_, b_best) = grid_argmax(tau0, 1001, |a| bti_threshold_oracle(a, ctx.others_load, 8000.0, &miner, eps));
        for (got, want, what) in [(c.u_min, c_best, "cvar"), (b.u_min, b_best, "bti")] {
            let err = (got - want).abs() / (1.0 + want.abs());
            ensure!(err <= 1e-4, "{what}: {got} vs oracle {want}");
            worst = worst.max(err);
        }
    }
    Ok(format!("max relative gap {worst:.1e}"))
}

fn sweep(s: &Scenario, axis: Axis, values: &[f64]) -> Result<Vec<SweepRow>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rows = run_sweep(s, axis, values, dir.path()).map_err(|e| e.to_string())?;
    ensure!(rows.iter().all(|r| r.converged()), "{axis:?} sweep has unconverged points");
    Ok(rows)
}

fn series(rows: &[SweepRow], mode: SolverMode, f: impl Fn(&SweepRow) -> f64) -> Vec<f64> {
    rows.iter().filter(|r| r.mode == mode).map(f).collect()
}

fn c8_sweeps() -> Result<String, String> {
    let limit = Duration::from_secs(300);
    let total = |r: &SweepRow| r.sum_u_min.unwrap();
    let load = |r: &SweepRow| r.sum_alpha_x.unwrap();

    let t = Instant::now();
    let rows = sweep(&Scenario::default(), Axis::Epsilon, &Axis::Epsilon.default_values())?;
    ensure!(t.elapsed() < limit, "epsilon sweep took {:?}", t.elapsed());
    for mode in [SolverMode::GaussianBti, SolverMode::DroCvar] {
        let v = series(&rows, mode, total);
        ensure!(v.windows(2).all(|w| w[1] >= w[0]), "{mode} total not nondecreasing in epsilon: {v:?}");
    }
    let det = series(&rows, SolverMode::Deterministic, total);
    ensure!(det.iter().all(|&v| v == det[0]), "deterministic total varies with epsilon: {det:?}");

    let mut het = Scenario::default();
    het.resources = minegame_cli::scenario::Resources::Heterogeneous { lo: 30.0, hi: 60.0, seed: None };
    for (label, s) in [("homogeneous", Scenario::default()), ("heterogeneous", het)] {
        let t = Instant::now();
        let rows = sweep(&s, Axis::NumMiners, &Axis::NumMiners.default_values())?;
        ensure!(t.elapsed() < limit, "{label} miner sweep took {:?}", t.elapsed());
        for mode in SolverMode::ALL {
            let v = series(&rows, mode, total);
            ensure!(v.windows(2).all(|w| w[1] < w[0]), "{label} {mode} total not decreasing in J: {v:?}");
        }
    }

    // Interior equilibria need a lower floor than the default 0.5 here.
    let mut s = Scenario::default();
    s.tau0 = 0.1;
    let values: Vec<f64> = (0..=6).map(|k| 40.0 + 10.0 * k as f64).collect();
    let t = Instant::now();
    let rows = sweep(&s, Axis::UnitCost, &values)?;
    ensure!(t.elapsed() < limit, "cost sweep took {:?}", t.elapsed());
    let mut spread: f64 = 0.0;
    for mode in SolverMode::ALL {
        let l = series(&rows, mode, load);
        ensure!(l.windows(2).all(|w| w[1] < w[0]), "{mode} load not decreasing in cost: {l:?}");
        let v = series(&rows, mode, total);
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let rel = (hi - lo) / lo.abs();
        ensure!(rel < 0.05, "{mode} total varies by {rel} over cost: {v:?}");
        spread = spread.max(rel);
    }
    Ok(format!("epsilon, J (homogeneous and heterogeneous) and cost sweeps hold; cost spread {spread:.1e}"))
}

fn c9_small_sigma() -> Result<String, String> {
    let mut cfg = GameConfigF64::with_resources(&[31.0, 42.0, 58.0, 36.0, 50.0], 1e-3);
    cfg.tau0 = 0.1;
    let opts = SolverOptionsF64::default();
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let p = StrategyProfileF64::new((0..5).map(|_| rng.random_range(0.2..0.9)).collect());
        for j in 0..5 {
            let det = best_response(j, &p, &cfg).map_err(|e| e.to_string())?;
            for mode in [SolverMode::GaussianBti, SolverMode::DroCvar] {
                let (a, _, _) = mode_best_response(mode, j, &p, &cfg, &opts).map_err(|e| e.to_string())?;
                ensure!((a - det).abs() < 1e-2, "{mode} miner {j}: {a} vs deterministic {det}");
                worst = worst.max((a - det).abs());
            }
        }
    }
    Ok(format!("max |alpha - alpha_det| {worst:.1e}"))
}

fn run_bin(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_minegame"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(o.status.success(), "minegame {args:?}: {}", String::from_utf8_lossy(&o.stderr));
    Ok(())
}

fn collect_files(dir: &Path, acc: &mut Vec<(String, Vec<u8>)>, root: &Path) {
    let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, acc, root);
        } else {
            acc.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
        }
    }
}

fn c10_reproducibility() -> Result<String, String> {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = work.path().join("scenario.json");
    fs::write(
        &cfg,
        r#"{"name": "repro", "resources": {"heterogeneous": {"lo": 30, "hi": 60}}, "samples": 1000,
            "sweep": {"axis": "epsilon", "values": [0.05, 0.1, 0.2]}}"#,
    )
    .map_err(|e| e.to_string())?;
    let cfg = cfg.display().to_string();
    let mut snapshots = Vec::new();
    for run in ["a", "b"] {
        let out = work.path().join(run);
        let out_s = out.display().to_string();
        for verb in ["solve", "sweep", "validate"] {
            run_bin(&[verb, "--config", &cfg, "--seed", "42", "--out", &out_s, "--mode", "all"])?;
        }
        let mut files = Vec::new();
        collect_files(&out, &mut files, &out);
        snapshots.push(files);
    }
    ensure!(snapshots[0].len() == 9, "expected 9 CSV files, found {}", snapshots[0].len());
    ensure!(snapshots[0] == snapshots[1], "outputs differ between runs");
    let bytes: usize = snapshots[0].iter().map(|f| f.1.len()).sum();
    Ok(format!("{} files, {bytes} bytes identical", snapshots[0].len()))
}

fn main() {
    let criteria: [(u32, &str, Check, u64); 10] = [
        (1, "deterministic oracle equivalence", c1_deterministic_oracle, 5),
        (2, "boundary equilibrium", c2_boundary_equilibrium, 1),
        (3, "derivative correctness", c3_derivatives, 60),
        (4, "CVaR chance-constraint soundness", c4_cvar_soundness, 60),
        (5, "BTI Gaussian soundness", c5_bti_soundness, 30),
        (6, "AO and best-response convergence", c6_convergence, 600),
        (7, "outer-search oracle equivalence", c7_outer_search, 600),
        (8, "sweep monotonicity properties", c8_sweeps, 900),
        (9, "small-sigma consistency", c9_small_sigma, 600),
        (10, "reproducibility", c10_reproducibility, 600),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, check, budget) in criteria {
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = t.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > Duration::from_secs(budget) => Err(format!("{msg}; took {elapsed:.2?}, budget {budget}s")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("[PASS] {id:>2} {name} ({elapsed:.2?}): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {id:>2} {name} ({elapsed:.2?}): {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
