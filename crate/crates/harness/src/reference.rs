//! Long conservative fixed-step runs used as an accuracy reference.

use grpadmm::{fes_gap, objective, step, Algorithm, FixedSteps, SolverConfig, SolverState, SplitProblem, StepRule, GOLDEN_RATIO};

use crate::presets::estimate_norm;

/// Safety factor applied to the largest admissible fixed step.
pub const REFERENCE_STEP_FACTOR: f64 = 0.99;

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub phi: f64,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub fes_gap: f64,
    pub iterations: usize,
    /// `false` when `iters` ran out before both stopping tests held.
    pub converged: bool,
}

/// The fixed-step configuration `reference_solve` uses for a given `sigma`.
pub fn reference_config(norm_a: f64, sigma: f64) -> grpadmm::Result<SolverConfig> {
    let tau = REFERENCE_STEP_FACTOR * GOLDEN_RATIO / (sigma * norm_a * norm_a);
    SolverConfig::new(
        Algorithm::GrpFixed,
        StepRule::Fixed(FixedSteps {
            tau,
            sigma,
            psi: GOLDEN_RATIO,
        }),
    )
}

/// Fixed-step golden-ratio ADMM with `sigma = 1 / ||A||`.
pub fn reference_solve(problem: &SplitProblem, iters: usize, tol: f64) -> grpadmm::Result<ReferenceSolution> {
    let norm_a = estimate_norm(&problem.a)?;
    let sigma = if norm_a > 0.0 { 1.0 / norm_a } else { 1.0 };
    reference_solve_with(problem, iters, tol, sigma)
}

/// As `reference_solve` with an explicit dual step `sigma`. Stops once
/// `fes_gap < tol` and both the objective and `x` moved by at most
/// `tol * max(1, size)`.
pub fn reference_solve_with(problem: &SplitProblem, iters: usize, tol: f64, sigma: f64) -> grpadmm::Result<ReferenceSolution> {
    let norm_a = estimate_norm(&problem.a)?;
    let config = reference_config(norm_a.max(f64::MIN_POSITIVE), sigma)?;
    let mut state = SolverState::zeros(problem, &config.rule);
    let mut phi_prev = objective(problem, &state.x, &state.w);
    let mut converged = false;
    for _ in 0..iters {
        step(&mut state, problem, &config)?;
        let phi = objective(problem, &state.x, &state.w);
        let gap = fes_gap(problem, &state.x, &state.w)?;
        let dx = grpadmm::vecops::dist(&state.x, &state.x_prev);
        if gap < tol
            && (phi - phi_prev).abs() <= tol * phi.abs().max(1.0)
            && dx <= tol * grpadmm::vecops::norm(&state.x).max(1.0)
        {
            converged = true;
            break;
        }
        phi_prev = phi;
    }
    Ok(ReferenceSolution {
        phi: objective(problem, &state.x, &state.w),
        fes_gap: fes_gap(problem, &state.x, &state.w)?,
        iterations: state.k,
        converged,
        x: state.x,
        w: state.w,
        y: state.y,
    })
}
