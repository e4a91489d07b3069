//! Seeded generators for the four benchmark problems.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`; normal variates
//! use `rand_distr::StandardNormal` (ziggurat). Draw order is fixed per
//! generator and documented on each function, so a spec plus seed always
//! yields bit-identical data within one build.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{LinearMap, PeriodicBlur};
use crate::problem::{GroundTruth, SplitProblem};
use crate::prox::{ProxTerm, QuadData};

/// Parameters of a benchmark instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSpec {
    Lasso {
        m: usize,
        n: usize,
        lambda: f64,
        seed: u64,
    },
    Rof {
        height: usize,
        width: usize,
        noise: f64,
        lambda: f64,
        seed: u64,
    },
    Deblur {
        height: usize,
        width: usize,
        psf_size: usize,
        psf_sigma: f64,
        noise: f64,
        lambda: f64,
        seed: u64,
    },
    Uot {
        n_s: usize,
        n_t: usize,
        gamma: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Lasso,
    Rof,
    Deblur,
    Uot,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Lasso => "lasso",
            ProblemKind::Rof => "rof",
            ProblemKind::Deblur => "deblur",
            ProblemKind::Uot => "uot",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [ProblemKind::Lasso, ProblemKind::Rof, ProblemKind::Deblur, ProblemKind::Uot]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown problem `{s}`")))
    }
}

impl ProblemSpec {
    /// Instances at the sizes used in the original experiments.
    pub fn paper(kind: ProblemKind, seed: u64) -> Self {
        match kind {
            ProblemKind::Lasso => ProblemSpec::Lasso { m: 200, n: 1000, lambda: 0.1, seed },
            ProblemKind::Rof => ProblemSpec::Rof { height: 256, width: 256, noise: 0.08, lambda: 0.1, seed },
            ProblemKind::Deblur => ProblemSpec::Deblur {
                height: 512,
                width: 512,
                psf_size: 15,
                psf_sigma: 2.0,
                noise: 0.02,
                lambda: 0.048,
                seed,
            },
            ProblemKind::Uot => ProblemSpec::Uot { n_s: 30, n_t: 30, gamma: 1.0, seed },
        }
    }

    /// Scaled-down instances that run in seconds.
    pub fn desk(kind: ProblemKind, seed: u64) -> Self {
        match Self::paper(kind, seed) {
            ProblemSpec::Rof { noise, lambda, seed, .. } => ProblemSpec::Rof { height: 64, width: 64, noise, lambda, seed },
            ProblemSpec::Deblur { psf_size, psf_sigma, noise, lambda, seed, .. } => ProblemSpec::Deblur {
                height: 128,
                width: 128,
                psf_size,
                psf_sigma,
                noise,
                lambda,
                seed,
            },
            other => other,
        }
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemSpec::Lasso { .. } => ProblemKind::Lasso,
            ProblemSpec::Rof { .. } => ProblemKind::Rof,
            ProblemSpec::Deblur { .. } => ProblemKind::Deblur,
            ProblemSpec::Uot { .. } => ProblemKind::Uot,
        }
    }

    pub fn seed(&self) -> u64 {
        match *self {
            ProblemSpec::Lasso { seed, .. }
            | ProblemSpec::Rof { seed, .. }
            | ProblemSpec::Deblur { seed, .. }
            | ProblemSpec::Uot { seed, .. } => seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        match *self {
            ProblemSpec::Lasso { m, n, lambda, .. } => {
                if m == 0 || n == 0 {
                    return bad("lasso sizes must be positive");
                }
                if !(lambda > 0.0) {
                    return bad("lambda must be positive");
                }
            }
            ProblemSpec::Rof { height, width, noise, lambda, .. } => {
                if height < 2 || width < 2 {
                    return bad("image sides must be at least 2");
                }
                if !(lambda > 0.0) || !(noise >= 0.0) {
                    return bad("need lambda > 0 and noise >= 0");
                }
            }
            ProblemSpec::Deblur { height, width, psf_size, psf_sigma, noise, lambda, .. } => {
                if height < 2 || width < 2 {
                    return bad("image sides must be at least 2");
                }
                if psf_size % 2 == 0 {
                    return bad("psf size must be odd");
                }
                if !(lambda > 0.0) || !(noise >= 0.0) || !(psf_sigma >= 0.0) {
                    return bad("need lambda > 0, noise >= 0 and psf sigma >= 0");
                }
            }
            ProblemSpec::Uot { n_s, n_t, gamma, .. } => {
                if n_s < 2 || n_t < 2 {
                    return bad("histogram sizes must be at least 2");
                }
                if !(gamma > 0.0) {
                    return bad("gamma must be positive");
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<SplitProblem> {
        self.validate()?;
        match *self {
            ProblemSpec::Lasso { m, n, lambda, seed } => gen_lasso(m, n, lambda, seed),
            ProblemSpec::Rof { height, width, noise, lambda, seed } => gen_rof(height, width, noise, lambda, seed),
            ProblemSpec::Deblur { height, width, psf_size, psf_sigma, noise, lambda, seed } => {
                gen_deblur(height, width, psf_size, psf_sigma, noise, lambda, seed)
            }
            ProblemSpec::Uot { n_s, n_t, gamma, seed } => gen_uot(n_s, n_t, gamma, seed),
        }
    }
}

fn normals(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `lambda ||x||_1 + 1/2 ||w - d||^2  s.t.  A x + w = b`.
///
/// Draws, in order: `A` row-major with entries `N(0, 1/n)`, `x_true ~ N(0, I)`,
/// `d ~ N(0, I)`, then one uniform per entry of `d` zeroing it with
/// probability 0.8. `b = A x_true + d`.
pub fn gen_lasso(m: usize, n: usize, lambda: f64, seed: u64) -> Result<SplitProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = LinearMap::dense(m, n, normals(&mut rng, m * n, 1.0 / (n as f64).sqrt()))?;
    let x_true = normals(&mut rng, n, 1.0);
    let mut d = normals(&mut rng, m, 1.0);
    for di in d.iter_mut() {
        if rng.gen::<f64>() < 0.8 {
            *di = 0.0;
        }
    }
    let mut b = a.apply(&x_true)?;
    for (bi, di) in b.iter_mut().zip(&d) {
        *bi += di;
    }
    SplitProblem::new(ProxTerm::l1(n, lambda), ProxTerm::sql2_shift(1.0, d), a, LinearMap::identity(m), b)?
        .with_truth(GroundTruth {
            x: x_true,
            image_shape: None,
            observation: None,
        })
}

/// Piecewise-constant test image: background 0.2, a 0.8 rectangle over
/// rows 0.15-0.45 / cols 0.2-0.6, a 0.5 rectangle over rows 0.55-0.85 /
/// cols 0.3-0.7 and a centered disk of radius 0.12 at 1.0 (drawn last).
/// Coordinates are relative, sampled at pixel centers.
pub fn piecewise_phantom(height: usize, width: usize) -> Vec<f64> {
    let mut img = vec![0.2; height * width];
    for i in 0..height {
        let r = (i as f64 + 0.5) / height as f64;
        for j in 0..width {
            let c = (j as f64 + 0.5) / width as f64;
            let px = &mut img[i * width + j];
            if (0.15..=0.45).contains(&r) && (0.2..=0.6).contains(&c) {
                *px = 0.8;
            }
            if (0.55..=0.85).contains(&r) && (0.3..=0.7).contains(&c) {
                *px = 0.5;
            }
            if (r - 0.5).powi(2) + (c - 0.5).powi(2) <= 0.12 * 0.12 {
                *px = 1.0;
            }
        }
    }
    img
}

/// ROF split of a given observation `c`:
/// `1/2 ||x - c||^2 + lambda ||w||_{2,1}  s.t.  grad x - w = 0`.
pub fn rof_from_observation(height: usize, width: usize, c: Vec<f64>, lambda: f64) -> Result<SplitProblem> {
    let n = height * width;
    SplitProblem::new(
        ProxTerm::sql2_shift(1.0, c),
        ProxTerm::group_l21(n, lambda),
        LinearMap::grad2d(height, width),
        LinearMap::negated_identity(2 * n),
        vec![0.0; 2 * n],
    )
}

/// ROF denoising of the piecewise phantom. Draws `height*width` normals for
/// the noise, then `c = clip(phantom + noise * eps, 0, 1)`.
pub fn gen_rof(height: usize, width: usize, noise: f64, lambda: f64, seed: u64) -> Result<SplitProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = piecewise_phantom(height, width);
    let eps = normals(&mut rng, height * width, noise);
    let c: Vec<f64> = truth.iter().zip(&eps).map(|(t, e)| (t + e).clamp(0.0, 1.0)).collect();
    rof_from_observation(height, width, c.clone(), lambda)?.with_truth(GroundTruth {
        x: truth,
        image_shape: Some((height, width)),
        observation: Some(c),
    })
}

/// Modified Shepp-Logan ellipses (Toft): intensity, semi-axes `a`, `b`,
/// center `(x0, y0)`, rotation in degrees.
pub const SHEPP_LOGAN_MODIFIED: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0],
    [-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0],
    [-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0],
    [0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0],
    [0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0],
    [0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0],
    [0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0],
];

/// Renders the modified Shepp-Logan phantom on `[-1, 1]^2` (y up) at pixel
/// centers, clipped to `[0, 1]` and divided by its maximum.
pub fn shepp_logan(height: usize, width: usize) -> Vec<f64> {
    let mut img = vec![0.0; height * width];
    for i in 0..height {
        let y = 1.0 - (2 * i + 1) as f64 / height as f64;
        for j in 0..width {
            let x = -1.0 + (2 * j + 1) as f64 / width as f64;
            let mut v = 0.0;
            for &[intensity, a, b, x0, y0, deg] in &SHEPP_LOGAN_MODIFIED {
                let (s, c) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let (u, w) = (dx * c + dy * s, -dx * s + dy * c);
                if (u / a).powi(2) + (w / b).powi(2) <= 1.0 {
                    v += intensity;
                }
            }
            img[i * width + j] = v;
        }
    }
    for v in img.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    let max = img.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        img.iter_mut().for_each(|v| *v /= max);
    }
    img
}

/// TV deblurring `1/2 ||K x - b||^2 + lambda ||w||_{2,1}  s.t.  grad x - w = 0`
/// of the Shepp-Logan phantom. `K` is the normalized Gaussian PSF under
/// periodic convolution; draws `height*width` noise normals.
pub fn gen_deblur(
    height: usize,
    width: usize,
    psf_size: usize,
    psf_sigma: f64,
    noise: f64,
    lambda: f64,
    seed: u64,
) -> Result<SplitProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = shepp_logan(height, width);
    let blur = LinearMap::BlurPeriodic(PeriodicBlur::gaussian(height, width, psf_size, psf_sigma)?);
    let mut observed = blur.apply(&truth)?;
    for (o, e) in observed.iter_mut().zip(normals(&mut rng, height * width, noise)) {
        *o += e;
    }
    let n = height * width;
    SplitProblem::new(
        ProxTerm::QuadData(QuadData::new(blur, observed.clone(), 1.0)?),
        ProxTerm::group_l21(n, lambda),
        LinearMap::grad2d(height, width),
        LinearMap::negated_identity(2 * n),
        vec![0.0; 2 * n],
    )?
    .with_truth(GroundTruth {
        x: truth,
        image_shape: Some((height, width)),
        observation: Some(observed),
    })
}

/// Uniform grid on `[0, 1]` with `n` points.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Unbalanced transport with quadratic marginal penalty:
/// `<c, x> + indicator(x >= 0) + gamma/2 ||w||^2  s.t.  A x + w = [a; b]`.
/// Draws `n_s` then `n_t` uniforms for the histograms.
pub fn gen_uot(n_s: usize, n_t: usize, gamma: f64, seed: u64) -> Result<SplitProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a: Vec<f64> = (0..n_s).map(|_| rng.gen::<f64>()).collect();
    let mut b: Vec<f64> = (0..n_t).map(|_| rng.gen::<f64>()).collect();
    normalize(&mut a);
    normalize(&mut b);
    uot_from_histograms(&a, &b, gamma)
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Builds the transport split for given histograms on uniform grids.
pub fn uot_from_histograms(a: &[f64], b: &[f64], gamma: f64) -> Result<SplitProblem> {
    let (n_s, n_t) = (a.len(), b.len());
    let (s, t) = (uniform_grid(n_s), uniform_grid(n_t));
    let cost: Vec<f64> = s
        .iter()
        .flat_map(|si| t.iter().map(move |tj| (si - tj) * (si - tj)))
        .collect();
    let rhs: Vec<f64> = a.iter().chain(b).copied().collect();
    SplitProblem::new(
        ProxTerm::linear_plus_nonneg(cost),
        ProxTerm::sql2(n_s + n_t, gamma),
        LinearMap::ot_marginal(n_s, n_t),
        LinearMap::identity(n_s + n_t),
        rhs,
    )
}

/// A generated instance saved for re-runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub spec: ProblemSpec,
    pub problem: SplitProblem,
}

impl ProblemFile {
    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_vec(self).map_err(std::io::Error::other)?;
        std::fs::write(path, json)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(std::io::Error::other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{fes_gap, objective};
    use crate::vecops::norm;

    #[test]
    fn lasso_truth_is_exactly_feasible() {
        let p = gen_lasso(20, 50, 0.1, 3).unwrap();
        let t = p.truth.as_ref().unwrap();
        let ProxTerm::Sql2Shift { shift, .. } = &p.f else { panic!() };
        let r = p.residual(&t.x, shift).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
        let zeros = shift.iter().filter(|&&v| v == 0.0).count();
        assert!(zeros > 10, "about 80% of d should be zero, got {zeros}/20");
        // x = 0, w = d: both terms vanish
        assert_eq!(objective(&p, &vec![0.0; 50], shift), 0.0);
        assert_eq!(fes_gap(&p, &vec![0.0; 50], &vec![0.0; 20]).unwrap(), norm(&p.rhs));
    }

    #[test]
    fn one_dimensional_lasso() {
        let p = gen_lasso(1, 1, 0.1, 7).unwrap();
        assert_eq!((p.x_dim(), p.w_dim(), p.m()), (1, 1, 1));
    }

    #[test]
    fn generators_are_deterministic() {
        for kind in [ProblemKind::Lasso, ProblemKind::Rof, ProblemKind::Uot] {
            let spec = ProblemSpec::desk(kind, 42);
            assert_eq!(spec.build().unwrap(), spec.build().unwrap());
        }
        let spec = ProblemSpec::Deblur { height: 16, width: 16, psf_size: 5, psf_sigma: 1.0, noise: 0.02, lambda: 0.05, seed: 1 };
        assert_eq!(spec.build().unwrap(), spec.build().unwrap());
        assert_ne!(gen_lasso(5, 5, 0.1, 1).unwrap(), gen_lasso(5, 5, 0.1, 2).unwrap());
    }

    #[test]
    fn uot_histograms_on_simplex() {
        let p = gen_uot(30, 30, 1.0, 9).unwrap();
        let (a, b) = p.rhs.split_at(30);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(objective(&p, &vec![0.0; 900], &vec![0.0; 60]), 0.0);
        // cost (s_i - t_j)^2 on the grid
        let ProxTerm::LinearPlusNonneg { cost } = &p.g else { panic!() };
        assert_eq!(cost[0], 0.0);
        assert!((cost[29] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uot_equal_histograms_diagonal_plan_is_optimal() {
        let a = [0.1, 0.4, 0.5];
        let p = uot_from_histograms(&a, &a, 1.0).unwrap();
        let mut x = vec![0.0; 9];
        for i in 0..3 {
            x[i * 3 + i] = a[i];
        }
        let w = vec![0.0; 6];
        assert_eq!(fes_gap(&p, &x, &w).unwrap(), 0.0);
        assert_eq!(objective(&p, &x, &w), 0.0);
    }

    #[test]
    fn rof_noise_free_observation_is_phantom() {
        let p = gen_rof(32, 32, 0.0, 0.1, 1).unwrap();
        let t = p.truth.as_ref().unwrap();
        assert_eq!(t.observation.as_ref().unwrap(), &t.x);
        assert!(t.x.iter().any(|&v| v == 1.0) && t.x.iter().any(|&v| v == 0.8));
        assert!(t.x.iter().any(|&v| v == 0.5) && t.x.iter().any(|&v| v == 0.2));
    }

    #[test]
    fn rof_objective_at_observation() {
        let p = gen_rof(8, 8, 0.1, 0.1, 2).unwrap();
        let c = p.truth.as_ref().unwrap().observation.clone().unwrap();
        let w = p.a.apply(&c).unwrap();
        let tv: f64 = (0..64).map(|i| w[i].hypot(w[64 + i])).sum();
        assert!((objective(&p, &c, &w) - 0.1 * tv).abs() < 1e-12);
        assert_eq!(fes_gap(&p, &c, &w).unwrap(), 0.0);
    }

    #[test]
    fn rof_constant_image_is_optimal() {
        let (h, w) = (6, 5);
        let p = rof_from_observation(h, w, vec![0.37; h * w], 0.3).unwrap();
        let x = vec![0.37; h * w];
        let g = vec![0.0; 2 * h * w];
        let best = objective(&p, &x, &g);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let z: Vec<f64> = x.iter().map(|v| v + 0.05 * rng.sample::<f64, _>(StandardNormal)).collect();
            let gz = p.a.apply(&z).unwrap();
            assert!(best <= objective(&p, &z, &gz));
        }
    }

    #[test]
    fn deblur_blur_preserves_constants_and_delta_psf_is_rof() {
        let blur = PeriodicBlur::gaussian(16, 16, 15, 2.0).unwrap();
        assert!((blur.kernel().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let k = LinearMap::BlurPeriodic(blur);
        assert!(k.apply(&[0.6; 256]).unwrap().iter().all(|v| (v - 0.6).abs() < 1e-12));

        let p = gen_deblur(12, 12, 5, 0.0, 0.02, 0.05, 3).unwrap();
        let obs = p.truth.as_ref().unwrap().observation.clone().unwrap();
        let rof = rof_from_observation(12, 12, obs, 0.05).unwrap();
        let x: Vec<f64> = (0..144).map(|i| (i as f64 * 0.1).cos()).collect();
        assert!((p.g.eval(&x) - rof.g.eval(&x)).abs() < 1e-12);
        let (a, b) = (p.g.prox(&x, 0.7).unwrap(), rof.g.prox(&x, 0.7).unwrap());
        assert!(crate::vecops::dist(&a, &b) < 1e-9);
    }

    #[test]
    fn shepp_logan_in_unit_range() {
        let img = shepp_logan(64, 64);
        assert!(img.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(img.iter().cloned().fold(0.0, f64::max), 1.0);
        assert_eq!(img[0], 0.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(ProblemSpec::Lasso { m: 0, n: 3, lambda: 0.1, seed: 0 }.build().is_err());
        assert!(ProblemSpec::Uot { n_s: 1, n_t: 3, gamma: 1.0, seed: 0 }.build().is_err());
        assert!(ProblemSpec::Rof { height: 8, width: 8, noise: -0.1, lambda: 0.1, seed: 0 }.build().is_err());
        assert!(ProblemSpec::Deblur { height: 8, width: 8, psf_size: 4, psf_sigma: 1.0, noise: 0.0, lambda: 0.1, seed: 0 }
            .build()
            .is_err());
    }

    #[test]
    fn problem_file_round_trip() {
        let spec = ProblemSpec::Deblur { height: 8, width: 8, psf_size: 5, psf_sigma: 1.0, noise: 0.02, lambda: 0.05, seed: 1 };
        let file = ProblemFile { spec: spec.clone(), problem: spec.build().unwrap() };
        let dir = std::env::temp_dir().join(format!("grpadmm-problem-{}.json", std::process::id()));
        file.save(&dir).unwrap();
        let back = ProblemFile::load(&dir).unwrap();
        std::fs::remove_file(&dir).ok();
        assert_eq!(back, file);
    }
}
