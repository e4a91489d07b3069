//! Convex terms `g` and `f` with function values and proximal mappings.
//!
//! `prox(v, t)` is `argmin_z term(z) + ||z - v||^2 / (2 t)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linops::LinearMap;
use crate::vecops::{axpy, dot, norm};

/// Relative residual target and iteration cap for the quadratic data prox.
pub const QUAD_SOLVE_TOL: f64 = 1e-10;
pub const QUAD_SOLVE_MAX_ITER: usize = 500;

/// `weight/2 * ||K x - data||^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadData {
    pub op: LinearMap,
    pub data: Vec<f64>,
    pub weight: f64,
    /// Use the Fourier diagonal of `K^T K` as preconditioner when `K` is a
    /// periodic blur.
    #[serde(default = "default_true")]
    pub precondition: bool,
}

fn default_true() -> bool {
    true
}

impl QuadData {
    pub fn new(op: LinearMap, data: Vec<f64>, weight: f64) -> Result<Self> {
        check_len("quad-data observation", op.codomain_dim(), data.len())?;
        if !(weight > 0.0) {
            return Err(Error::InvalidParameter(format!("quad-data weight must be > 0, got {weight}")));
        }
        Ok(Self {
            op,
            data,
            weight,
            precondition: true,
        })
    }

    /// Applies `I + alpha K^T K`.
    fn normal_apply(&self, alpha: f64, z: &[f64], scratch: &mut [f64], out: &mut [f64]) -> Result<()> {
        self.op.apply_into(z, scratch)?;
        self.op.adjoint_into(scratch, out)?;
        for (o, zi) in out.iter_mut().zip(z) {
            *o = zi + alpha * *o;
        }
        Ok(())
    }

    /// Right-hand side `v + alpha K^T data`.
    pub fn normal_rhs(&self, v: &[f64], alpha: f64) -> Result<Vec<f64>> {
        let mut rhs = self.op.adjoint(&self.data)?;
        for (r, vi) in rhs.iter_mut().zip(v) {
            *r = vi + alpha * *r;
        }
        Ok(rhs)
    }

    /// `||(I + alpha K^T K) z - rhs||`.
    pub fn normal_residual(&self, z: &[f64], rhs: &[f64], alpha: f64) -> Result<f64> {
        let mut scratch = vec![0.0; self.op.codomain_dim()];
        let mut out = vec![0.0; z.len()];
        self.normal_apply(alpha, z, &mut scratch, &mut out)?;
        Ok(out.iter().zip(rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }

    /// Conjugate gradients on `(I + t*weight K^T K) z = v + t*weight K^T data`,
    /// starting from `start` when given.
    fn prox(&self, v: &[f64], t: f64, start: Option<&[f64]>) -> Result<Vec<f64>> {
        let alpha = t * self.weight;
        let n = v.len();
        let rhs = self.normal_rhs(v, alpha)?;
        let rhs_norm = norm(&rhs);
        let mut z = match start {
            Some(s) if s.len() == n => s.to_vec(),
            _ => v.to_vec(),
        };
        if rhs_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let target = QUAD_SOLVE_TOL * rhs_norm;
        let mut scratch = vec![0.0; self.op.codomain_dim()];
        let mut q = vec![0.0; n];
        self.normal_apply(alpha, &z, &mut scratch, &mut q)?;
        let mut r: Vec<f64> = rhs.iter().zip(&q).map(|(b, a)| b - a).collect();
        let blur = match (&self.op, self.precondition) {
            (LinearMap::BlurPeriodic(b), true) => Some(b),
            _ => None,
        };
        let precond = |r: &[f64], out: &mut Vec<f64>| match blur {
            Some(b) => b.solve_shifted_normal(alpha, r, out),
            None => out.copy_from_slice(r),
        };
        let mut s = vec![0.0; n];
        precond(&r, &mut s);
        let mut p = s.clone();
        let mut rs = dot(&r, &s);
        let mut rnorm = norm(&r);
        for _ in 0..QUAD_SOLVE_MAX_ITER {
            if rnorm <= target {
                return Ok(z);
            }
            self.normal_apply(alpha, &p, &mut scratch, &mut q)?;
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                break;
            }
            let step = rs / pq;
            axpy(step, &p, &mut z);
            axpy(-step, &q, &mut r);
            rnorm = norm(&r);
            precond(&r, &mut s);
            let rs_new = dot(&r, &s);
            let ratio = rs_new / rs;
            rs = rs_new;
            for (pi, si) in p.iter_mut().zip(&s) {
                *pi = si + ratio * *pi;
            }
        }
        // recompute the true residual before giving up
        let true_res = self.normal_residual(&z, &rhs, alpha)?;
        if true_res <= target {
            Ok(z)
        } else {
            Err(Error::LinearSolveFailed {
                iterations: QUAD_SOLVE_MAX_ITER,
                residual: true_res / rhs_norm,
            })
        }
    }
}

/// The convex terms available for `g` and `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProxTerm {
    Zero { dim: usize },
    /// `weight * ||v||_1`
    L1 { dim: usize, weight: f64 },
    /// `weight/2 * ||v - shift||^2`
    Sql2Shift { weight: f64, shift: Vec<f64> },
    /// `weight * sum_i ||(v_i, v_{n+i})||` over `n` pixel pairs stored as two planes.
    GroupL21 { groups: usize, weight: f64 },
    /// `<cost, v> + indicator(v >= 0)`
    LinearPlusNonneg { cost: Vec<f64> },
    QuadData(QuadData),
}

impl ProxTerm {
    pub fn zero(dim: usize) -> Self {
        ProxTerm::Zero { dim }
    }

    pub fn l1(dim: usize, weight: f64) -> Self {
        ProxTerm::L1 { dim, weight }
    }

    pub fn sql2_shift(weight: f64, shift: Vec<f64>) -> Self {
        ProxTerm::Sql2Shift { weight, shift }
    }

    /// `weight/2 * ||v||^2`
    pub fn sql2(dim: usize, weight: f64) -> Self {
        ProxTerm::Sql2Shift {
            weight,
            shift: vec![0.0; dim],
        }
    }

    pub fn group_l21(groups: usize, weight: f64) -> Self {
        ProxTerm::GroupL21 { groups, weight }
    }

    pub fn linear_plus_nonneg(cost: Vec<f64>) -> Self {
        ProxTerm::LinearPlusNonneg { cost }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ProxTerm::Zero { .. } => "zero",
            ProxTerm::L1 { .. } => "l1",
            ProxTerm::Sql2Shift { .. } => "sql2-shift",
            ProxTerm::GroupL21 { .. } => "group-l21",
            ProxTerm::LinearPlusNonneg { .. } => "linear-plus-nonneg",
            ProxTerm::QuadData(_) => "quad-data",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProxTerm::Zero { dim } | ProxTerm::L1 { dim, .. } => *dim,
            ProxTerm::Sql2Shift { shift, .. } => shift.len(),
            ProxTerm::GroupL21 { groups, .. } => 2 * groups,
            ProxTerm::LinearPlusNonneg { cost } => cost.len(),
            ProxTerm::QuadData(q) => q.op.domain_dim(),
        }
    }

    /// Function value; `f64::INFINITY` outside the domain.
    pub fn eval(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        match self {
            ProxTerm::Zero { .. } => 0.0,
            ProxTerm::L1 { weight, .. } => weight * v.iter().map(|x| x.abs()).sum::<f64>(),
            ProxTerm::Sql2Shift { weight, shift } => {
                0.5 * weight * v.iter().zip(shift).map(|(x, d)| (x - d) * (x - d)).sum::<f64>()
            }
            ProxTerm::GroupL21 { groups, weight } => {
                let (h, vv) = v.split_at(*groups);
                weight * h.iter().zip(vv).map(|(a, b)| a.hypot(*b)).sum::<f64>()
            }
            ProxTerm::LinearPlusNonneg { cost } => {
                if v.iter().any(|&x| x < 0.0) {
                    f64::INFINITY
                } else {
                    dot(cost, v)
                }
            }
            ProxTerm::QuadData(q) => match q.op.apply(v) {
                Ok(kv) => {
                    0.5 * q.weight
                        * kv.iter().zip(&q.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                }
                Err(_) => f64::NAN,
            },
        }
    }

    pub fn prox(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        self.prox_from(v, t, None)
    }

    /// Like `prox`, but the iterative quad-data solve starts from (and then
    /// stores into) `warm`. Closed-form kinds ignore it.
    pub fn prox_warm(&self, v: &[f64], t: f64, warm: &mut Option<Vec<f64>>) -> Result<Vec<f64>> {
        let z = self.prox_from(v, t, warm.as_deref())?;
        if matches!(self, ProxTerm::QuadData(_)) {
            *warm = Some(z.clone());
        }
        Ok(z)
    }

    fn prox_from(&self, v: &[f64], t: f64, start: Option<&[f64]>) -> Result<Vec<f64>> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveStep(t));
        }
        check_len("prox input", self.dim(), v.len())?;
        Ok(match self {
            ProxTerm::Zero { .. } => v.to_vec(),
            ProxTerm::L1 { weight, .. } => {
                let thr = weight * t;
                v.iter().map(|&x| soft_threshold(x, thr)).collect()
            }
            ProxTerm::Sql2Shift { weight, shift } => {
                let tw = t * weight;
                v.iter().zip(shift).map(|(x, d)| (x + tw * d) / (1.0 + tw)).collect()
            }
            ProxTerm::GroupL21 { groups, weight } => {
                let thr = weight * t;
                let mut out = v.to_vec();
                let (h, vv) = out.split_at_mut(*groups);
                for (a, b) in h.iter_mut().zip(vv.iter_mut()) {
                    let n = a.hypot(*b);
                    let scale = if n > thr { 1.0 - thr / n } else { 0.0 };
                    *a *= scale;
                    *b *= scale;
                }
                out
            }
            ProxTerm::LinearPlusNonneg { cost } => {
                v.iter().zip(cost).map(|(x, c)| (x - t * c).max(0.0)).collect()
            }
            ProxTerm::QuadData(q) => q.prox(v, t, start)?,
        })
    }
}

/// Shrinks toward zero by `thr`; `|x| == thr` maps to exactly 0.
#[inline]
pub fn soft_threshold(x: f64, thr: f64) -> f64 {
    if x.abs() <= thr {
        0.0
    } else {
        x - thr.copysign(x)
    }
}
