use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linops::LinearMap;
use crate::prox::ProxTerm;

/// Known solution data attached to a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub x: Vec<f64>,
    /// `(height, width)` when `x` is an image; enables PSNR tracking.
    pub image_shape: Option<(usize, usize)>,
    /// The degraded observation in image space (noisy or blurred image).
    pub observation: Option<Vec<f64>>,
}

/// `min g(x) + f(w)  s.t.  A x + B w = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitProblem {
    pub g: ProxTerm,
    pub f: ProxTerm,
    pub a: LinearMap,
    pub b: LinearMap,
    pub rhs: Vec<f64>,
    pub truth: Option<GroundTruth>,
}

impl SplitProblem {
    pub fn new(g: ProxTerm, f: ProxTerm, a: LinearMap, b: LinearMap, rhs: Vec<f64>) -> Result<Self> {
        check_len("A domain vs g", g.dim(), a.domain_dim())?;
        check_len("B domain vs f", f.dim(), b.domain_dim())?;
        check_len("B codomain vs A codomain", a.codomain_dim(), b.codomain_dim())?;
        check_len("constraint rhs", a.codomain_dim(), rhs.len())?;
        if b.identity_scale().is_none() {
            return Err(Error::UnsupportedCoupling(b.kind_name()));
        }
        Ok(Self {
            g,
            f,
            a,
            b,
            rhs,
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: GroundTruth) -> Result<Self> {
        check_len("ground truth x", self.x_dim(), truth.x.len())?;
        if let Some((h, w)) = truth.image_shape {
            check_len("ground truth image", h * w, truth.x.len())?;
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn x_dim(&self) -> usize {
        self.a.domain_dim()
    }

    pub fn w_dim(&self) -> usize {
        self.b.domain_dim()
    }

    pub fn m(&self) -> usize {
        self.rhs.len()
    }

    /// `A x + B w - rhs` given a precomputed `A x`.
    pub fn residual_from_ax(&self, ax: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let mut bw = self.b.apply(w)?;
        for ((r, a), c) in bw.iter_mut().zip(ax).zip(&self.rhs) {
            *r = a + *r - c;
        }
        Ok(bw)
    }

    pub fn residual(&self, x: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        self.residual_from_ax(&self.a.apply(x)?, w)
    }
}
