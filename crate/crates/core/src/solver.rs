//! Golden-ratio proximal ADMM with fixed steps, the decreasing and the
//! increasing norm-free step rules, and linearized proximal ADMM (PADMM).
//!
//! The x-weight is `S = I` and the w-weight is `T = t I` throughout; `B`
//! must be a (signed, scaled) identity so the w-subproblem is a prox.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::metrics::{objective, psnr, MetricsRow};
use crate::problem::SplitProblem;
use crate::vecops::{all_finite, norm, sub};

/// The golden ratio `(1 + sqrt 5) / 2`.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    GrpFixed,
    Alg1,
    Alg2,
    Padmm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Alg2,
        Algorithm::Alg1,
        Algorithm::GrpFixed,
        Algorithm::Padmm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GrpFixed => "grp-fixed",
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Padmm => "padmm",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm `{s}`")))
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Constant primal and dual steps. `psi` is ignored by PADMM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedSteps {
    pub tau: f64,
    pub sigma: f64,
    pub psi: f64,
}

/// Nonincreasing rule: `tau_k = min(tau_{k-1}, mu sqrt(lmin) / sqrt(beta) * ||dx|| / ||A dx||)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alg1Rule {
    pub tau0: f64,
    pub beta: f64,
    pub psi: f64,
    pub mu: f64,
    pub lambda_min_s: f64,
}

/// `xi_j` added to the growth factor at iteration `j + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum XiSchedule {
    Zero,
    /// `xi_j = 1 / (j + 1)^exponent`
    ShiftedPower { exponent: f64 },
}

impl XiSchedule {
    pub fn value(&self, j: usize) -> f64 {
        match *self {
            XiSchedule::Zero => 0.0,
            XiSchedule::ShiftedPower { exponent } => 1.0 / ((j + 1) as f64).powf(exponent),
        }
    }
}

impl Default for XiSchedule {
    fn default() -> Self {
        XiSchedule::ShiftedPower { exponent: 1.01 }
    }
}

/// Increasing rule: shrink to `r1 lbar / (sqrt(beta) L_k)` when
/// `tau_{k-1} L_k > r lbar / sqrt(beta)`, otherwise grow by `rho + xi_{k-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alg2Rule {
    pub tau0: f64,
    pub beta: f64,
    pub psi: f64,
    pub rho: f64,
    pub r: f64,
    pub r1: f64,
    pub lambda_bar: f64,
    pub xi: XiSchedule,
    /// Optional cap on the grow branch; `None` is unbounded.
    pub tau_max: Option<f64>,
}

impl Alg2Rule {
    /// `1/psi + 1/psi^2`, the largest admissible growth factor.
    pub fn max_rho(psi: f64) -> f64 {
        1.0 / psi + 1.0 / (psi * psi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum StepRule {
    Fixed(FixedSteps),
    Alg1(Alg1Rule),
    Alg2(Alg2Rule),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

impl StepRule {
    pub fn validate(&self, algorithm: Algorithm) -> Result<()> {
        match (self, algorithm) {
            (StepRule::Fixed(s), Algorithm::GrpFixed | Algorithm::Padmm) => {
                positive("tau", s.tau)?;
                positive("sigma", s.sigma)?;
                if algorithm == Algorithm::GrpFixed {
                    ensure(s.psi > 1.0 && s.psi <= GOLDEN_RATIO, || {
                        format!("psi must lie in (1, phi], got {}", s.psi)
                    })?;
                }
                Ok(())
            }
            (StepRule::Alg1(p), Algorithm::Alg1) => {
                positive("tau0", p.tau0)?;
                positive("beta", p.beta)?;
                positive("lambda_min_s", p.lambda_min_s)?;
                ensure(p.psi > 1.0 && p.psi <= GOLDEN_RATIO, || {
                    format!("psi must lie in (1, phi], got {}", p.psi)
                })?;
                ensure(p.mu > 0.0 && p.mu < p.psi / 2.0, || {
                    format!("mu must lie in (0, psi/2) = (0, {}), got {}", p.psi / 2.0, p.mu)
                })
            }
            (StepRule::Alg2(p), Algorithm::Alg2) => {
                positive("tau0", p.tau0)?;
                positive("beta", p.beta)?;
                positive("lambda_bar", p.lambda_bar)?;
                ensure(p.psi > 1.0 && p.psi < GOLDEN_RATIO, || {
                    format!("psi must lie in (1, phi), got {}", p.psi)
                })?;
                let hi = Alg2Rule::max_rho(p.psi);
                ensure(p.rho > 1.0 && p.rho <= hi, || {
                    format!("rho must lie in (1, {hi}], got {}", p.rho)
                })?;
                ensure(p.r1 > 0.0 && p.r1 < p.r && p.r < p.rho / 2.0, || {
                    format!("need 0 < r1 < r < rho/2, got r1={} r={} rho={}", p.r1, p.r, p.rho)
                })?;
                if let XiSchedule::ShiftedPower { exponent } = p.xi {
                    ensure(exponent > 0.0, || "xi exponent must be positive".into())?;
                }
                if let Some(cap) = p.tau_max {
                    ensure(cap >= p.tau0, || format!("tau_max {cap} is below tau0 {}", p.tau0))?;
                }
                Ok(())
            }
            (rule, algo) => Err(Error::InvalidParameter(format!(
                "step rule {rule:?} does not drive algorithm {algo}"
            ))),
        }
    }

    fn initial_tau(&self) -> f64 {
        match self {
            StepRule::Fixed(s) => s.tau,
            StepRule::Alg1(p) => p.tau0,
            StepRule::Alg2(p) => p.tau0,
        }
    }

    fn initial_sigma(&self) -> f64 {
        match self {
            StepRule::Fixed(s) => s.sigma,
            StepRule::Alg1(p) => p.beta * p.tau0,
            StepRule::Alg2(p) => p.beta * p.tau0,
        }
    }

    fn psi(&self) -> f64 {
        match self {
            StepRule::Fixed(s) => s.psi,
            StepRule::Alg1(p) => p.psi,
            StepRule::Alg2(p) => p.psi,
        }
    }
}

/// A validated algorithm + step rule + w-proximal weight `t` (`T = t I`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub rule: StepRule,
    pub t_weight: f64,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, rule: StepRule) -> Result<Self> {
        Self::with_t_weight(algorithm, rule, 0.0)
    }

    pub fn with_t_weight(algorithm: Algorithm, rule: StepRule, t_weight: f64) -> Result<Self> {
        rule.validate(algorithm)?;
        ensure(t_weight >= 0.0 && t_weight.is_finite(), || {
            format!("T weight must be >= 0, got {t_weight}")
        })?;
        Ok(Self {
            algorithm,
            rule,
            t_weight,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Shrink,
    Grow,
}

/// Iterates and step-size state of one run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub x_prev: Vec<f64>,
    /// Cached `A x`.
    pub ax: Vec<f64>,
    pub tau_prev: f64,
    pub tau: f64,
    pub sigma: f64,
    pub k: usize,
    pub shrink_events: usize,
    pub last_branch: Option<Branch>,
    /// Set once the `tau_max` cap has bound at least once.
    pub tau_cap_hit: bool,
    warm_g: Option<Vec<f64>>,
    warm_f: Option<Vec<f64>>,
}

impl SolverState {
    pub fn zeros(problem: &SplitProblem, rule: &StepRule) -> Self {
        Self::new(
            problem,
            rule,
            vec![0.0; problem.x_dim()],
            vec![0.0; problem.w_dim()],
            vec![0.0; problem.m()],
        )
        .expect("zero vectors have matching dimensions")
    }

    /// Starts from `(x0, w0, y0)` with `u0 = x0`.
    pub fn new(
        problem: &SplitProblem,
        rule: &StepRule,
        x0: Vec<f64>,
        w0: Vec<f64>,
        y0: Vec<f64>,
    ) -> Result<Self> {
        check_len("x0", problem.x_dim(), x0.len())?;
        check_len("w0", problem.w_dim(), w0.len())?;
        check_len("y0", problem.m(), y0.len())?;
        let ax = problem.a.apply(&x0)?;
        let tau = rule.initial_tau();
        Ok(Self {
            u: x0.clone(),
            x_prev: x0.clone(),
            x: x0,
            w: w0,
            y: y0,
            ax,
            tau_prev: tau,
            tau,
            sigma: rule.initial_sigma(),
            k: 0,
            shrink_events: 0,
            last_branch: None,
            tau_cap_hit: false,
            warm_g: None,
            warm_f: None,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.tau.is_finite()
            && self.sigma.is_finite()
            && all_finite(&self.x)
            && all_finite(&self.w)
            && all_finite(&self.y)
    }
}

/// `((psi - 1)/psi) x_prev + (1/psi) u_prev`.
pub fn golden_combine(x_prev: &[f64], u_prev: &[f64], psi: f64) -> Result<Vec<f64>> {
    check_len("golden_combine", x_prev.len(), u_prev.len())?;
    ensure(psi > 1.0, || format!("psi must exceed 1, got {psi}"))?;
    let (a, b) = ((psi - 1.0) / psi, 1.0 / psi);
    Ok(x_prev.iter().zip(u_prev).map(|(x, u)| a * x + b * u).collect())
}

/// `prox_{tau g}(u - tau A^T y)`: the x-subproblem with `S = I`.
pub fn x_update(
    problem: &SplitProblem,
    anchor: &[f64],
    y: &[f64],
    tau: f64,
    warm: &mut Option<Vec<f64>>,
) -> Result<Vec<f64>> {
    let mut v = problem.a.adjoint(y)?;
    for (vi, ui) in v.iter_mut().zip(anchor) {
        *vi = ui - tau * *vi;
    }
    problem.g.prox_warm(&v, tau, warm)
}

/// Decreasing rule. Keeps `tau_prev` when `A dx = 0` or `dx = 0`.
pub fn tau_update_alg1(tau_prev: f64, dx: &[f64], a_dx: &[f64], rule: &Alg1Rule) -> f64 {
    let (ndx, nadx) = (norm(dx), norm(a_dx));
    if ndx == 0.0 || nadx == 0.0 {
        return tau_prev;
    }
    let candidate = rule.mu * rule.lambda_min_s.sqrt() / rule.beta.sqrt() * ndx / nadx;
    tau_prev.min(candidate)
}

/// Increasing rule at iteration `k >= 1`. Returns the new step, the branch
/// taken and whether the `tau_max` cap bound.
pub fn tau_update_alg2(tau_prev: f64, curvature: Option<f64>, k: usize, rule: &Alg2Rule) -> (f64, Branch, bool) {
    let sb = rule.beta.sqrt();
    if let Some(l) = curvature {
        // strict inequality; ties grow
        if tau_prev * l > rule.r * rule.lambda_bar / sb {
            return (rule.r1 * rule.lambda_bar / (sb * l), Branch::Shrink, false);
        }
    }
    let grown = (rule.rho + rule.xi.value(k.saturating_sub(1))) * tau_prev;
    match rule.tau_max {
        Some(cap) if grown > cap => (cap, Branch::Grow, true),
        _ => (grown, Branch::Grow, false),
    }
}

/// Closed-form minimizer of
/// `f(w) + <y, B w> + sigma/2 ||A x + B w - b||^2 + prox_weight/2 ||w - w_prev||^2`
/// for `B = s I`, given `ax = A x`.
pub fn w_update(
    problem: &SplitProblem,
    ax: &[f64],
    w_prev: &[f64],
    y_prev: &[f64],
    sigma: f64,
    prox_weight: f64,
    warm: &mut Option<Vec<f64>>,
) -> Result<Vec<f64>> {
    let s = problem
        .b
        .identity_scale()
        .ok_or_else(|| Error::UnsupportedCoupling(problem.b.kind_name()))?;
    let denom = sigma * s * s + prox_weight;
    if !(denom > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "w-subproblem is not strongly convex (sigma s^2 + t = {denom})"
        )));
    }
    let center: Vec<f64> = ax
        .iter()
        .zip(&problem.rhs)
        .zip(y_prev)
        .zip(w_prev)
        .map(|(((a, b), y), w)| (sigma * s * (b - a) - s * y + prox_weight * w) / denom)
        .collect();
    problem.f.prox_warm(&center, 1.0 / denom, warm)
}

/// `y_prev + sigma * residual`.
pub fn y_update(y_prev: &[f64], sigma: f64, residual: &[f64]) -> Vec<f64> {
    y_prev.iter().zip(residual).map(|(y, r)| y + sigma * r).collect()
}

/// What happened inside one `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub branch: Option<Branch>,
    pub curvature: Option<f64>,
}

/// One full iteration, mutating `state` in place.
pub fn step(state: &mut SolverState, problem: &SplitProblem, config: &SolverConfig) -> Result<StepInfo> {
    let k = state.k + 1;
    let mut info = StepInfo {
        branch: None,
        curvature: None,
    };
    let tau_old = state.tau;
    let (x_new, ax_new, u_new, tau, sigma) = match config.algorithm {
        Algorithm::Padmm => {
            let StepRule::Fixed(s) = config.rule else {
                unreachable!("validated")
            };
            // linearized x-step: S = I/tau - sigma A^T A
            let residual = problem.residual_from_ax(&state.ax, &state.w)?;
            let dual = y_update(&state.y, s.sigma, &residual);
            let x_new = x_update(problem, &state.x, &dual, s.tau, &mut state.warm_g)?;
            let ax_new = problem.a.apply(&x_new)?;
            (x_new, ax_new, state.u.clone(), s.tau, s.sigma)
        }
        _ => {
            let u = golden_combine(&state.x, &state.u, config.rule.psi())?;
            let x_new = x_update(problem, &u, &state.y, tau_old, &mut state.warm_g)?;
            let ax_new = problem.a.apply(&x_new)?;
            let (tau, sigma) = match &config.rule {
                StepRule::Fixed(s) => (s.tau, s.sigma),
                StepRule::Alg1(p) => {
                    let tau = tau_update_alg1(tau_old, &sub(&x_new, &state.x), &sub(&ax_new, &state.ax), p);
                    (tau, p.beta * tau)
                }
                StepRule::Alg2(p) => {
                    let ndx = norm(&sub(&x_new, &state.x));
                    let curvature = (ndx != 0.0).then(|| norm(&sub(&ax_new, &state.ax)) / ndx);
                    let (tau, branch, capped) = tau_update_alg2(tau_old, curvature, k, p);
                    if branch == Branch::Shrink {
                        state.shrink_events += 1;
                    }
                    state.tau_cap_hit |= capped;
                    info.branch = Some(branch);
                    info.curvature = curvature;
                    (tau, p.beta * tau)
                }
            };
            (x_new, ax_new, u, tau, sigma)
        }
    };
    let prox_weight = match config.algorithm {
        Algorithm::Alg2 => config.t_weight / sigma,
        _ => config.t_weight,
    };
    let w_new = w_update(problem, &ax_new, &state.w, &state.y, sigma, prox_weight, &mut state.warm_f)?;
    let residual = problem.residual_from_ax(&ax_new, &w_new)?;
    let y_new = y_update(&state.y, sigma, &residual);

    state.x_prev = std::mem::replace(&mut state.x, x_new);
    state.u = u_new;
    state.ax = ax_new;
    state.w = w_new;
    state.y = y_new;
    state.tau_prev = tau_old;
    state.tau = tau;
    state.sigma = sigma;
    state.k = k;
    state.last_branch = info.branch;
    Ok(info)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    AbortedNonfinite { k: usize, tau: f64 },
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub iters: usize,
    /// Record a metrics row every `cadence` iterations (and always the last).
    pub cadence: usize,
    pub x0: Option<Vec<f64>>,
    pub w0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
}

impl RunOptions {
    pub fn new(iters: usize) -> Self {
        Self {
            iters,
            cadence: 1,
            x0: None,
            w0: None,
            y0: None,
        }
    }

    pub fn with_cadence(mut self, cadence: usize) -> Self {
        self.cadence = cadence.max(1);
        self
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: SolverConfig,
    pub rows: Vec<MetricsRow>,
    pub status: RunStatus,
    pub state: SolverState,
    /// Running means of `x_1..x_k` and `w_1..w_k`.
    pub x_avg: Vec<f64>,
    pub w_avg: Vec<f64>,
}

/// Runs `step` `options.iters` times, recording metrics and ergodic
/// averages. `observe` sees the state after every iteration.
pub fn run(
    problem: &SplitProblem,
    config: &SolverConfig,
    options: &RunOptions,
    mut observe: impl FnMut(&SolverState, &StepInfo),
) -> Result<RunReport> {
    ensure(options.iters >= 1, || "iters must be at least 1".into())?;
    let mut state = SolverState::new(
        problem,
        &config.rule,
        options.x0.clone().unwrap_or_else(|| vec![0.0; problem.x_dim()]),
        options.w0.clone().unwrap_or_else(|| vec![0.0; problem.w_dim()]),
        options.y0.clone().unwrap_or_else(|| vec![0.0; problem.m()]),
    )?;
    let truth = problem
        .truth
        .as_ref()
        .filter(|t| t.image_shape.is_some())
        .map(|t| t.x.as_slice());
    let mut x_avg = vec![0.0; problem.x_dim()];
    let mut w_avg = vec![0.0; problem.w_dim()];
    let mut rows = Vec::with_capacity(options.iters / options.cadence.max(1) + 1);
    let mut status = RunStatus::Completed;
    let started = Instant::now();
    for _ in 0..options.iters {
        let info = step(&mut state, problem, config)?;
        if !state.is_finite() {
            status = RunStatus::AbortedNonfinite {
                k: state.k,
                tau: state.tau,
            };
            break;
        }
        let kf = state.k as f64;
        for (a, x) in x_avg.iter_mut().zip(&state.x) {
            *a += (x - *a) / kf;
        }
        for (a, w) in w_avg.iter_mut().zip(&state.w) {
            *a += (w - *a) / kf;
        }
        observe(&state, &info);
        if state.k % options.cadence.max(1) == 0 || state.k == options.iters {
            rows.push(MetricsRow {
                k: state.k,
                tau: state.tau,
                sigma: state.sigma,
                objective: objective(problem, &state.x, &state.w),
                rel_gap: None,
                fes_gap: norm(&problem.residual_from_ax(&state.ax, &state.w)?),
                ergodic_objective: objective(problem, &x_avg, &w_avg),
                psnr: truth.map(|t| psnr(&state.x, t)).transpose()?,
                time_ms: started.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
    Ok(RunReport {
        config: *config,
        rows,
        status,
        state,
        x_avg,
        w_avg,
    })
}
