//! Published per-problem parameter sets for the four algorithms.

use grpadmm::problems::ProblemKind;
use grpadmm::{Alg1Rule, Alg2Rule, Algorithm, FixedSteps, LinearMap, SolverConfig, StepRule, XiSchedule, GOLDEN_RATIO};

/// Power-iteration settings used whenever a preset needs `||A||`.
pub const NORM_TOL: f64 = 1e-10;
pub const NORM_MAX_ITER: usize = 20_000;
pub const NORM_SEED: u64 = 0;

pub fn estimate_norm(a: &LinearMap) -> grpadmm::Result<f64> {
    a.estimate_spectral_norm(NORM_TOL, NORM_MAX_ITER, NORM_SEED)
}

/// Default iteration count when a command does not give one.
pub fn default_iters(kind: ProblemKind) -> usize {
    match kind {
        ProblemKind::Uot => 1000,
        _ => 2000,
    }
}

fn alg2(tau0: f64, beta: f64, r: f64, r1: f64) -> StepRule {
    let psi = 1.60;
    StepRule::Alg2(Alg2Rule {
        tau0,
        beta,
        psi,
        rho: Alg2Rule::max_rho(psi),
        r,
        r1,
        lambda_bar: 1.0,
        xi: XiSchedule::default(),
        tau_max: None,
    })
}

fn alg1(tau0: f64, beta: f64, psi: f64, mu: f64) -> StepRule {
    StepRule::Alg1(Alg1Rule {
        tau0,
        beta,
        psi,
        mu,
        lambda_min_s: 1.0,
    })
}

fn grp_fixed(sigma: f64, norm_a: f64) -> StepRule {
    let psi = GOLDEN_RATIO;
    StepRule::Fixed(FixedSteps {
        tau: psi / (sigma * norm_a * norm_a),
        sigma,
        psi,
    })
}

fn padmm(sigma: f64, norm_a: f64) -> StepRule {
    StepRule::Fixed(FixedSteps {
        tau: 1.0 / (sigma * norm_a * norm_a),
        sigma,
        psi: GOLDEN_RATIO,
    })
}

/// The preset configuration for `algorithm` on `kind`. `norm_a` is only
/// read by the fixed-step methods.
pub fn preset(kind: ProblemKind, algorithm: Algorithm, norm_a: f64) -> grpadmm::Result<SolverConfig> {
    let rule = match (kind, algorithm) {
        (ProblemKind::Lasso, Algorithm::Alg2) => alg2(1.0, 7.0, 0.50, 0.45),
        (ProblemKind::Lasso, Algorithm::Alg1) => alg1(1.0, 7.0, 1.60, 0.7),
        (ProblemKind::Lasso, Algorithm::GrpFixed) => grp_fixed(2.0, norm_a),
        (ProblemKind::Lasso, Algorithm::Padmm) => padmm(2.0, norm_a),

        (ProblemKind::Rof, Algorithm::Alg2) => alg2(1.0, 8.0, 0.48, 0.42),
        (ProblemKind::Rof, Algorithm::Alg1) => alg1(1.0, 20.0, GOLDEN_RATIO, 0.8),
        (ProblemKind::Rof, Algorithm::GrpFixed) => grp_fixed(10.0, norm_a),
        (ProblemKind::Rof, Algorithm::Padmm) => padmm(15.0, norm_a),

        (ProblemKind::Deblur, Algorithm::Alg2) => alg2(10.0, 10.0, 0.50, 0.45),
        (ProblemKind::Deblur, Algorithm::Alg1) => alg1(10.0, 20.0, GOLDEN_RATIO, 0.8),
        (ProblemKind::Deblur, Algorithm::GrpFixed) => grp_fixed(10.0, norm_a),
        (ProblemKind::Deblur, Algorithm::Padmm) => padmm(15.0, norm_a),

        // no tau0 is published for transport; 1 is used
        (ProblemKind::Uot, Algorithm::Alg2) => alg2(1.0, 1.0, 0.48, 0.45),
        (ProblemKind::Uot, Algorithm::Alg1) => alg1(1.0, 0.5, GOLDEN_RATIO, 0.7),
        (ProblemKind::Uot, Algorithm::GrpFixed) => grp_fixed(1.0, norm_a),
        (ProblemKind::Uot, Algorithm::Padmm) => padmm(1.0, norm_a),
    };
    SolverConfig::new(algorithm, rule)
}

/// Overrides one named rule parameter (`tau`, `sigma`, `psi`, `tau0`,
/// `beta`, `mu`, `rho`, `r`, `r1`, `lambda_bar`, `lambda_min_s`, `xi`,
/// `tau_max`, `t`) and revalidates.
pub fn apply_override(config: &mut SolverConfig, key: &str, value: f64) -> grpadmm::Result<()> {
    let unknown = || grpadmm::Error::InvalidParameter(format!("parameter `{key}` does not apply to {}", config.algorithm));
    if key == "t" {
        *config = SolverConfig::with_t_weight(config.algorithm, config.rule, value)?;
        return Ok(());
    }
    let mut rule = config.rule;
    match &mut rule {
        StepRule::Fixed(s) => match key {
            "tau" => s.tau = value,
            "sigma" => s.sigma = value,
            "psi" => s.psi = value,
            _ => return Err(unknown()),
        },
        StepRule::Alg1(p) => match key {
            "tau0" => p.tau0 = value,
            "beta" => p.beta = value,
            "psi" => p.psi = value,
            "mu" => p.mu = value,
            "lambda_min_s" => p.lambda_min_s = value,
            _ => return Err(unknown()),
        },
        StepRule::Alg2(p) => match key {
            "tau0" => p.tau0 = value,
            "beta" => p.beta = value,
            "psi" => p.psi = value,
            "rho" => p.rho = value,
            "r" => p.r = value,
            "r1" => p.r1 = value,
            "lambda_bar" => p.lambda_bar = value,
            "xi" => {
                p.xi = if value == 0.0 {
                    XiSchedule::Zero
                } else {
                    XiSchedule::ShiftedPower { exponent: value }
                }
            }
            "tau_max" => p.tau_max = value.is_finite().then_some(value),
            _ => return Err(unknown()),
        },
    }
    *config = SolverConfig::with_t_weight(config.algorithm, rule, config.t_weight)?;
    Ok(())
}
