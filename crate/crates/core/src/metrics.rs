//! Objective, feasibility residual and PSNR.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::problem::SplitProblem;
use crate::vecops::norm;

/// One recorded iteration of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub k: usize,
    pub tau: f64,
    pub sigma: f64,
    pub objective: f64,
    /// Filled in once the pooled optimum is known.
    pub rel_gap: Option<f64>,
    pub fes_gap: f64,
    pub ergodic_objective: f64,
    pub psnr: Option<f64>,
    pub time_ms: f64,
}

/// `g(x) + f(w)`; infinite values propagate.
pub fn objective(problem: &SplitProblem, x: &[f64], w: &[f64]) -> f64 {
    problem.g.eval(x) + problem.f.eval(w)
}

/// `||A x + B w - b||_2`.
pub fn fes_gap(problem: &SplitProblem, x: &[f64], w: &[f64]) -> Result<f64> {
    Ok(norm(&problem.residual(x, w)?))
}

/// `10 log10(1 / MSE)` after clipping `x` to `[0, 1]`. Identical images give
/// `f64::INFINITY`.
pub fn psnr(x: &[f64], x_true: &[f64]) -> Result<f64> {
    check_len("psnr", x_true.len(), x.len())?;
    let mse = x
        .iter()
        .zip(x_true)
        .map(|(a, b)| (a.clamp(0.0, 1.0) - b).powi(2))
        .sum::<f64>()
        / x.len() as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn psnr_values() {
        assert_eq!(psnr(&[0.2, 0.4], &[0.2, 0.4]).unwrap(), f64::INFINITY);
        // MSE 0.01 -> 20 dB
        assert_relative_eq!(psnr(&[0.1, 0.1], &[0.0, 0.2]).unwrap(), 20.0, epsilon = 1e-12);
        assert_relative_eq!(psnr(&[1.0], &[0.0]).unwrap(), 0.0, epsilon = 1e-15);
        // clipping happens before the error is measured
        assert_eq!(psnr(&[1.7, -3.0], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(psnr(&[0.0], &[0.0, 1.0]).is_err());
    }
}
