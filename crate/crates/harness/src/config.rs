//! Turning command-line choices into problem specs and solver configs.

use grpadmm::problems::{ProblemKind, ProblemSpec};
use grpadmm::{Algorithm, SolverConfig, SplitProblem};

use crate::compare::NamedConfig;
use crate::presets::{apply_override, estimate_norm, preset};

/// Problems larger than this record metrics every `LARGE_CADENCE` iterations.
pub const CADENCE_THRESHOLD: usize = 100_000;
pub const LARGE_CADENCE: usize = 10;

/// Resolves `paper`, `desk` or `RxC` (rows by columns: `m x n` for LASSO,
/// `height x width` for images, `n_s x n_t` for transport).
pub fn problem_spec(kind: ProblemKind, size: &str, seed: u64) -> grpadmm::Result<ProblemSpec> {
    let spec = match size {
        "paper" => ProblemSpec::paper(kind, seed),
        "desk" => ProblemSpec::desk(kind, seed),
        dims => {
            let (r, c) = parse_dims(dims)
                .ok_or_else(|| grpadmm::Error::InvalidParameter(format!("size `{dims}` is not paper, desk or RxC")))?;
            match ProblemSpec::paper(kind, seed) {
                ProblemSpec::Lasso { lambda, seed, .. } => ProblemSpec::Lasso { m: r, n: c, lambda, seed },
                ProblemSpec::Rof { noise, lambda, seed, .. } => ProblemSpec::Rof { height: r, width: c, noise, lambda, seed },
                ProblemSpec::Deblur { psf_size, psf_sigma, noise, lambda, seed, .. } => ProblemSpec::Deblur {
                    height: r,
                    width: c,
                    psf_size,
                    psf_sigma,
                    noise,
                    lambda,
                    seed,
                },
                ProblemSpec::Uot { gamma, seed, .. } => ProblemSpec::Uot { n_s: r, n_t: c, gamma, seed },
            }
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_dims(s: &str) -> Option<(usize, usize)> {
    let (r, c) = s.split_once(['x', 'X'])?;
    Some((r.trim().parse().ok()?, c.trim().parse().ok()?))
}

pub fn default_cadence(problem: &SplitProblem) -> usize {
    if problem.x_dim() + problem.w_dim() <= CADENCE_THRESHOLD {
        1
    } else {
        LARGE_CADENCE
    }
}

/// Splits `key=value`.
pub fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// The preset for `algorithm` with `overrides` applied in order. The norm of
/// `A` is only estimated when the algorithm needs it.
pub fn build_config(
    kind: ProblemKind,
    algorithm: Algorithm,
    problem: &SplitProblem,
    overrides: &[(String, f64)],
) -> grpadmm::Result<SolverConfig> {
    let norm_a = match algorithm {
        Algorithm::GrpFixed | Algorithm::Padmm => estimate_norm(&problem.a)?,
        _ => 1.0,
    };
    let mut config = preset(kind, algorithm, norm_a)?;
    for (k, v) in overrides {
        apply_override(&mut config, k, *v)?;
    }
    Ok(config)
}

/// All four presets, named by algorithm.
pub fn preset_suite(kind: ProblemKind, problem: &SplitProblem) -> grpadmm::Result<Vec<NamedConfig>> {
    let norm_a = estimate_norm(&problem.a)?;
    Algorithm::ALL
        .iter()
        .map(|&a| Ok(NamedConfig::new(a.name(), preset(kind, a, norm_a)?)))
        .collect()
}

/// Layout of `x` for iterate dumps.
pub fn iterate_shape(spec: &ProblemSpec) -> Option<(usize, usize)> {
    match *spec {
        ProblemSpec::Lasso { .. } => None,
        ProblemSpec::Rof { height, width, .. } | ProblemSpec::Deblur { height, width, .. } => Some((height, width)),
        ProblemSpec::Uot { n_s, n_t, .. } => Some((n_s, n_t)),
    }
}
