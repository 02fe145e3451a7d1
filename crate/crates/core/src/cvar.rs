//! Worst-case CVaR treatment of the distributionally robust utility
//! constraint.
//!
//! For a fixed investment `alpha`, miner `j` wants the largest threshold
//! `U` such that `U_j >= U` holds with probability at least `1 - eps` under
//! *every* distribution of its resource with the given mean and variance.
//! Clearing the denominator of the utility turns the event into
//! `L(x) <= 0` for a convex quadratic loss `L`, and the worst-case
//! constraint is then equivalent to the existence of `beta` and a 2x2
//! matrix `M` with
//!
//! ```text
//! beta + Tr(Omega M) / eps <= 0,   M >= 0,   M - Q(alpha, U, beta) >= 0,
//! Q = [[c alpha^2,          alpha (U + B) / 2],
//!      [alpha (U + B) / 2,  U C - beta       ]],
//! ```
//!
//! with `Omega` the second-moment matrix of `(x, 1)`. Both matrix
//! inequalities are 2x2, so feasibility for one `U` is a four-variable
//! convex program solved here by a log-barrier method; the largest `U` is
//! found by bisection. The best response alternates that threshold step
//! with a strategy step that picks the `alpha` leaving the most slack in
//! `M - Q`.

use crate::error::{GameError, Result};
use crate::linalg::{solve_spd4, Sym2};
use crate::model::{Context, GameConfig, MinerParams, StrategyProfile};
use crate::options::SolverOptions;
use crate::scalar::Scalar;
use crate::search::{bisect_max, golden_max, scan_then_golden};

/// Coefficients of `L(x) = a2 x^2 + a1 x + a0`; `L(x) <= 0` iff the
/// utility at resource `x` reaches the threshold (for `alpha x + C > 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefficients<T> {
    pub a2: T,
    pub a1: T,
    pub a0: T,
    /// `-R + c C`.
    pub b: T,
    /// Rivals' nominal load `C`.
    pub c: T,
}

impl<T: Scalar> LossCoefficients<T> {
    pub fn new(alpha: T, u_min: T, ctx: &Context<T>, cost: T) -> Self {
        let b = ctx.b_term(cost);
        Self {
            a2: cost * alpha * alpha,
            a1: (u_min + b) * alpha,
            a0: u_min * ctx.others_load,
            b,
            c: ctx.others_load,
        }
    }

    pub fn eval(&self, x: T) -> T {
        (self.a2 * x + self.a1) * x + self.a0
    }

    /// Real roots in ascending order, if any.
    pub fn roots(&self) -> Option<(T, T)> {
        let disc = self.a1 * self.a1 - T::of(4.0) * self.a2 * self.a0;
        if disc < T::zero() {
            return None;
        }
        let sq = disc.sqrt();
        // Cancellation-free form.
        let q = -T::of(0.5) * (self.a1 + self.a1.signum() * sq);
        let (r1, r2) = if q == T::zero() {
            (T::zero(), T::zero())
        } else {
            (q / self.a2, self.a0 / q)
        };
        Some((r1.min(r2), r1.max(r2)))
    }
}

/// Loss at a resource value.
pub fn loss_eval<T: Scalar>(coeffs: &LossCoefficients<T>, x: T) -> T {
    coeffs.eval(x)
}

/// Second-moment matrix `[[sigma^2 + m^2, m], [m, 1]]` of `(x, 1)` where
/// `m = x_hat + mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentMatrix<T> {
    pub mean: T,
    pub matrix: Sym2<T>,
}

impl<T: Scalar> MomentMatrix<T> {
    pub fn new(mean: T, sigma2: T) -> Self {
        Self {
            mean,
            matrix: Sym2::new(sigma2 + mean * mean, mean, T::one()),
        }
    }

    pub fn for_miner(m: &MinerParams<T>) -> Self {
        Self::new(m.nominal(), m.sigma2)
    }

    /// `Tr(Omega M)`.
    pub fn trace_with(&self, m: &Sym2<T>) -> T {
        self.matrix.frobenius_dot(m)
    }
}

/// The matrix `Q` bounded by `M`, with `t` in place of `c alpha^2`.
pub fn constraint_matrix<T: Scalar>(alpha: T, t: T, u_min: T, beta: T, ctx: &Context<T>, cost: T) -> Sym2<T> {
    let half = T::of(0.5);
    Sym2::new(
        t,
        half * alpha * (u_min + ctx.b_term(cost)),
        u_min * ctx.others_load - beta,
    )
}

/// Witness that a threshold satisfies the worst-case CVaR constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvarCertificate<T> {
    pub beta: T,
    pub m: Sym2<T>,
    pub u_min: T,
    /// Bound on `c alpha^2` used in the strategy step.
    pub t_c: T,
}

/// Constraint values of a certificate; all three must be `>= -tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateResiduals<T> {
    /// `lambda_min(M)`.
    pub m_psd: T,
    /// `lambda_min(M - Q)`.
    pub gap_psd: T,
    /// `-(beta + Tr(Omega M) / eps)`.
    pub cvar: T,
}

impl<T: Scalar> CertificateResiduals<T> {
    pub fn holds(&self, tol: T) -> bool {
        self.m_psd >= -tol && self.gap_psd >= -tol && self.cvar >= -tol
    }
}

impl<T: Scalar> CvarCertificate<T> {
    pub fn residuals(&self, alpha: T, ctx: &Context<T>, miner: &MinerParams<T>, epsilon: T) -> CertificateResiduals<T> {
        let omega = MomentMatrix::for_miner(miner);
        let q = constraint_matrix(alpha, miner.cost * alpha * alpha, self.u_min, self.beta, ctx, miner.cost);
        CertificateResiduals {
            m_psd: self.m.min_eigenvalue(),
            gap_psd: self.m.sub(&q).min_eigenvalue(),
            cvar: -(self.beta + omega.trace_with(&self.m) / epsilon),
        }
    }
}

struct BarrierProblem<T> {
    q11: T,
    q12: T,
    /// Corner of `Q` before subtracting `beta`.
    uc: T,
    omega: Sym2<T>,
    inv_eps: T,
}

/// Variables are `(beta, m11, m12, m22)`.
type Point<T> = [T; 4];

impl<T: Scalar> BarrierProblem<T> {
    fn m(z: &Point<T>) -> Sym2<T> {
        Sym2::new(z[1], z[2], z[3])
    }

    fn n(&self, z: &Point<T>) -> Sym2<T> {
        Sym2::new(z[1] - self.q11, z[2] - self.q12, z[3] - self.uc + z[0])
    }

    fn objective(&self, z: &Point<T>) -> T {
        z[0] + self.inv_eps * self.omega.frobenius_dot(&Self::m(z))
    }

    fn objective_grad(&self) -> Point<T> {
        let two = T::of(2.0);
        [
            T::one(),
            self.inv_eps * self.omega.a,
            self.inv_eps * two * self.omega.b,
            self.inv_eps * self.omega.d,
        ]
    }

    fn interior(&self, z: &Point<T>) -> bool {
        Self::m(z).is_positive_definite() && self.n(z).is_positive_definite()
    }

    /// `t f(z) - ln det M - ln det N`.
    fn merit(&self, z: &Point<T>, t: T) -> T {
        t * self.objective(z) - Self::m(z).det().ln() - self.n(z).det().ln()
    }

    /// Gradient and Hessian of [`Self::merit`].
    fn derivatives(&self, z: &Point<T>, t: T) -> (Point<T>, [[T; 4]; 4]) {
        let mut grad = self.objective_grad().map(|g| g * t);
        let mut hess = [[T::zero(); 4]; 4];
        // Each matrix entry (x1, x2, x3) maps to a set of variables.
        let m_map: [&[usize]; 3] = [&[1], &[2], &[3]];
        let n_map: [&[usize]; 3] = [&[1], &[2], &[0, 3]];
        for (mat, map) in [(Self::m(z), m_map), (self.n(z), n_map)] {
            let det = mat.det();
            let g = [mat.d, -T::of(2.0) * mat.b, mat.a];
            let hdet = [
                [T::zero(), T::zero(), T::one()],
                [T::zero(), -T::of(2.0), T::zero()],
                [T::one(), T::zero(), T::zero()],
            ];
            for p in 0..3 {
                let gp = -g[p] / det;
                for &zi in map[p] {
                    grad[zi] = grad[zi] + gp;
                }
                for q in 0..3 {
                    let h = g[p] * g[q] / (det * det) - hdet[p][q] / det;
                    for &zi in map[p] {
                        for &zj in map[q] {
                            hess[zi][zj] = hess[zi][zj] + h;
                        }
                    }
                }
            }
        }
        (grad, hess)
    }

    /// Strictly feasible start with `M - Q = s I`.
    fn start(&self) -> Point<T> {
        let q = Sym2::new(self.q11, self.q12, self.uc);
        let s = T::one() + (-q.min_eigenvalue()).max(T::zero()) + T::of(1e-2) * q.max_abs();
        let m = q.add_diag(s);
        [T::zero(), m.a, m.b, m.d]
    }

    /// Damped Newton centering of `merit(., t)`.
    fn center(&self, mut z: Point<T>, t: T, opts: &SolverOptions<T>) -> Point<T> {
        for _ in 0..100 {
            let (g, h) = self.derivatives(&z, t);
            let Some(step) = solve_spd4(&h, &g.map(|v| -v)) else {
                break;
            };
            let decrement = -(0..4).fold(T::zero(), |acc, i| acc + g[i] * step[i]);
            if !(decrement * T::of(0.5) > opts.newton_tol) {
                break;
            }
            let base = self.merit(&z, t);
            let mut s = T::one();
            let mut moved = false;
            for _ in 0..60 {
                let cand = [0, 1, 2, 3].map(|i| z[i] + s * step[i]);
                if self.interior(&cand) && self.merit(&cand, t) <= base - T::of(0.25) * s * decrement {
                    z = cand;
                    moved = true;
                    break;
                }
                s = s * T::of(0.5);
            }
            if !moved {
                break;
            }
        }
        z
    }

    /// Minimizes the objective over the feasible set. Returns the last
    /// iterate and whether it certifies a nonpositive objective.
    fn solve(&self, opts: &SolverOptions<T>) -> (Point<T>, bool) {
        // Barrier parameter of two 2x2 PSD cones.
        let theta = T::of(4.0);
        let mut z = self.start();
        let mut t = theta / T::one().max(self.objective(&z).abs());
        for _ in 0..opts.max_barrier_steps {
            z = self.center(z, t, opts);
            let f = self.objective(&z);
            if f <= T::zero() {
                return (z, true);
            }
            let gap = theta / t;
            if f - T::of(1.01) * gap > T::zero() {
                return (z, false);
            }
            if gap <= T::of(1e-11) * (T::one() + f.abs()) {
                break;
            }
            t = t / opts.barrier_reduction;
        }
        let ok = self.objective(&z) <= T::zero();
        (z, ok)
    }
}

/// Checks whether threshold `u_min` is certifiable at `alpha` and returns a
/// certificate when it is.
pub fn cvar_feasibility<T: Scalar>(
    alpha: T,
    u_min: T,
    ctx: &Context<T>,
    miner: &MinerParams<T>,
    epsilon: T,
    opts: &SolverOptions<T>,
) -> Option<CvarCertificate<T>> {
    // Solved in standardized coordinates x = m + sigma e, where the moment
    // matrix is the identity; the certificate is mapped back afterwards.
    let mean = miner.nominal();
    let sigma = miner.sigma();
    let q = constraint_matrix(alpha, miner.cost * alpha * alpha, u_min, T::zero(), ctx, miner.cost)
        .affine_congruence(sigma, mean);
    let problem = BarrierProblem {
        q11: q.a,
        q12: q.b,
        uc: q.d,
        omega: Sym2::identity(),
        inv_eps: T::one() / epsilon,
    };
    let (z, ok) = problem.solve(opts);
    ok.then(|| CvarCertificate {
        beta: z[0],
        m: Sym2::new(z[1], z[2], z[3]).affine_congruence(sigma.recip(), -mean / sigma),
        u_min,
        t_c: miner.cost * alpha * alpha,
    })
}

fn check_threshold_inputs<T: Scalar>(alpha: T, miner: &MinerParams<T>, epsilon: T, tau0: Option<T>) -> Result<()> {
    if !(miner.sigma2 > T::zero()) {
        return Err(GameError::Domain("robust solvers need sigma2 > 0".into()));
    }
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(GameError::Domain("epsilon must lie in (0, 1)".into()));
    }
    let lo = tau0.unwrap_or(T::zero());
    if !(alpha >= lo && alpha <= T::one()) {
        return Err(GameError::Domain(format!("alpha {alpha} outside [{lo}, 1]")));
    }
    Ok(())
}

/// Largest certifiable threshold at a fixed `alpha`, with its certificate.
pub fn subproblem_threshold<T: Scalar>(
    alpha: T,
    ctx: &Context<T>,
    miner: &MinerParams<T>,
    epsilon: T,
    opts: &SolverOptions<T>,
) -> Result<(T, CvarCertificate<T>)> {
    check_threshold_inputs(alpha, miner, epsilon, None)?;
    let probe = |u: T| cvar_feasibility(alpha, u, ctx, miner, epsilon, opts);
    let (lo, cert) = threshold_bracket(ctx.reward, miner, probe)?;
    Ok(bisect_max(lo, ctx.reward, opts.bisection_tol, cert, probe))
}

/// Lower end of the threshold bracket: `-R - c x_max`, falling back to `-1e9`.
pub(crate) fn threshold_bracket<T: Scalar, P>(
    reward: T,
    miner: &MinerParams<T>,
    probe: impl Fn(T) -> Option<P>,
) -> Result<(T, P)> {
    for lo in [-reward - miner.cost * miner.x_max, T::of(-1e9)] {
        if let Some(p) = probe(lo) {
            return Ok((lo, p));
        }
    }
    Err(GameError::Solver(
        "utility threshold infeasible even at -1e9".into(),
    ))
}

/// Outcome of a strategy step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyStep<T> {
    pub alpha: T,
    /// Constraint slack at the returned `alpha`.
    pub slack: T,
    /// `false` when no `alpha` in `[tau0, 1]` keeps the constraint satisfied;
    /// the incoming `alpha` is returned unchanged in that case.
    pub feasible: bool,
}

/// Picks the `alpha` whose constraint slack is largest, keeping the incoming
/// value on ties. Shared by the CVaR and Gaussian strategy steps.
pub(crate) fn maximize_slack<T: Scalar>(
    alpha_in: T,
    tau0: T,
    opts: &SolverOptions<T>,
    scale: T,
    slack: impl Fn(T) -> T,
) -> StrategyStep<T> {
    let s_in = slack(alpha_in);
    let (a_best, s_best) = scan_then_golden(tau0, T::one(), opts.scan_step, opts.refine_tol, &slack);
    let tie = T::of(1e-12) * (T::one() + scale.abs());
    let (alpha, s) = if s_best > s_in + tie {
        (a_best, s_best)
    } else {
        (alpha_in, s_in)
    };
    if s < T::zero() {
        StrategyStep {
            alpha: alpha_in,
            slack: s_in,
            feasible: false,
        }
    } else {
        StrategyStep {
            alpha,
            slack: s,
            feasible: true,
        }
    }
}

/// Minimum-eigenvalue slack `lambda_min(M - Q(alpha))` with `t = c alpha^2`.
pub fn cvar_slack<T: Scalar>(alpha: T, cert: &CvarCertificate<T>, ctx: &Context<T>, cost: T) -> T {
    let q = constraint_matrix(alpha, cost * alpha * alpha, cert.u_min, cert.beta, ctx, cost);
    cert.m.sub(&q).min_eigenvalue()
}

/// Strategy step with the threshold and certificate held fixed.
pub fn subproblem_strategy<T: Scalar>(
    alpha_in: T,
    cert: &CvarCertificate<T>,
    ctx: &Context<T>,
    miner: &MinerParams<T>,
    tau0: T,
    opts: &SolverOptions<T>,
) -> StrategyStep<T> {
    maximize_slack(alpha_in, tau0, opts, cert.m.max_abs(), |a| {
        cvar_slack(a, cert, ctx, miner.cost)
    })
}

/// Distributionally robust best response of one miner.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustResponse<T> {
    pub alpha: T,
    pub u_min: T,
    pub certificate: CvarCertificate<T>,
    /// Alternating-optimization rounds performed.
    pub iterations: usize,
    /// Threshold after each round, starting with the initial threshold step.
    pub u_history: Vec<T>,
}

/// Alternates threshold and strategy steps from `alpha_start`.
pub fn robust_best_response_in<T: Scalar>(
    ctx: &Context<T>,
    miner: &MinerParams<T>,
    tau0: T,
    epsilon: T,
    alpha_start: T,
    opts: &SolverOptions<T>,
) -> Result<RobustResponse<T>> {
    let mut alpha = alpha_start.max(tau0).min(T::one());
    check_threshold_inputs(alpha, miner, epsilon, Some(tau0))?;
    let (mut u, mut cert) = subproblem_threshold(alpha, ctx, miner, epsilon, opts)?;
    let mut history = vec![u];

    for it in 1..=opts.ao_max_iterations {
        let step = subproblem_strategy(alpha, &cert, ctx, miner, tau0, opts);
        let (mut a_new, mut u_new, mut cert_new) = match subproblem_threshold(step.alpha, ctx, miner, epsilon, opts)? {
            (v, _) if v < u && step.feasible => {
                // The old certificate still holds at the new alpha.
                let c = CvarCertificate {
                    t_c: miner.cost * step.alpha * step.alpha,
                    ..cert
                };
                (step.alpha, u, c)
            }
            (v, c) => (step.alpha, v, c),
        };

        // A fixed certificate only admits a narrow window of alpha, often a
        // single point, so the plain alternation creeps or stalls. Probe the
        // neighbours when it stalls, keep stepping along any improving
        // direction, then refine the bracket around the best point.
        let mut dir = step.alpha - alpha;
        let mut behind = alpha;
        let mut ahead = a_new;
        if dir == T::zero() {
            let d = T::of(10.0) * opts.scan_step;
            behind = (alpha - d).max(tau0);
            ahead = (alpha + d).min(T::one());
            for cand in [ahead, behind] {
                if cand == alpha {
                    continue;
                }
                let (v, c) = subproblem_threshold(cand, ctx, miner, epsilon, opts)?;
                if v > u_new + opts.bisection_tol {
                    (a_new, u_new, cert_new) = (cand, v, c);
                    dir = cand - alpha;
                    behind = alpha;
                    ahead = cand;
                    break;
                }
            }
        }
        let mut reach = T::of(2.0);
        while dir != T::zero() {
            let cand = (alpha + reach * dir).max(tau0).min(T::one());
            if cand == a_new {
                break;
            }
            let (v, c) = subproblem_threshold(cand, ctx, miner, epsilon, opts)?;
            ahead = cand;
            if v <= u_new + opts.bisection_tol {
                break;
            }
            behind = a_new;
            (a_new, u_new, cert_new) = (cand, v, c);
            reach = reach * T::of(2.0);
        }
        let (lo, hi) = (behind.min(ahead), behind.max(ahead));
        if hi - lo > opts.refine_tol {
            let (a_ref, _) = golden_max(lo, hi, opts.refine_tol, &mut |a| {
                subproblem_threshold(a, ctx, miner, epsilon, opts).map_or(T::neg_infinity(), |r| r.0)
            });
            let (v, c) = subproblem_threshold(a_ref, ctx, miner, epsilon, opts)?;
            if v > u_new + opts.bisection_tol {
                (a_new, u_new, cert_new) = (a_ref, v, c);
            }
        }

        let delta = (u_new - u).abs() + (a_new - alpha).abs();
        alpha = a_new;
        u = u_new;
        cert = cert_new;
        history.push(u);
        if delta <= opts.ao_tol {
            return Ok(RobustResponse {
                alpha,
                u_min: u,
                certificate: cert,
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

/// Robust best response of miner `j`, starting from its entry in `profile`.
pub fn robust_best_response<T: Scalar>(
    j: usize,
    profile: &StrategyProfile<T>,
    config: &GameConfig<T>,
    opts: &SolverOptions<T>,
) -> Result<RobustResponse<T>> {
    let ctx = Context::for_miner(j, profile, config)?;
    let miner = config.miner(j)?;
    robust_best_response_in(&ctx, miner, config.tau0, config.epsilon, profile.alphas[j], opts)
}
