//! Matrix-free linear operators used as `A` and `B` in the splitting.
//!
//! Images and transport plans are vectorized row-major. Gradient fields are
//! two stacked planes: horizontal differences first, vertical second.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::vecops::{dot, norm, sub};

/// A row-major image with pixel values nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image2D {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl Image2D {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter("image dimensions must be positive".into()));
        }
        check_len("Image2D pixels", height * width, pixels.len())?;
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            pixels: vec![value; height * width],
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// How a periodic blur evaluates its convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlurMethod {
    Direct,
    Fourier,
}

/// Periodic convolution with a square, odd-sized kernel centered at
/// `(ksize / 2, ksize / 2)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "BlurRepr", into = "BlurRepr")]
pub struct PeriodicBlur {
    height: usize,
    width: usize,
    ksize: usize,
    kernel: Vec<f64>,
    method: BlurMethod,
    fourier: Arc<FourierPlan>,
}

#[derive(Serialize, Deserialize)]
struct BlurRepr {
    height: usize,
    width: usize,
    ksize: usize,
    kernel: Vec<f64>,
    method: BlurMethod,
}

impl TryFrom<BlurRepr> for PeriodicBlur {
    type Error = Error;
    fn try_from(r: BlurRepr) -> Result<Self> {
        PeriodicBlur::new(r.height, r.width, r.ksize, r.kernel, r.method)
    }
}

impl From<PeriodicBlur> for BlurRepr {
    fn from(b: PeriodicBlur) -> Self {
        BlurRepr {
            height: b.height,
            width: b.width,
            ksize: b.ksize,
            kernel: b.kernel,
            method: b.method,
        }
    }
}

impl fmt::Debug for PeriodicBlur {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicBlur")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("ksize", &self.ksize)
            .field("method", &self.method)
            .finish_non_exhaustive()
    }
}

impl PartialEq for PeriodicBlur {
    fn eq(&self, other: &Self) -> bool {
        self.height == other.height
            && self.width == other.width
            && self.ksize == other.ksize
            && self.kernel == other.kernel
            && self.method == other.method
    }
}

struct FourierPlan {
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    /// Transfer function of the kernel embedded in the image grid.
    spectrum: Vec<Complex64>,
}

impl FourierPlan {
    fn new(height: usize, width: usize, ksize: usize, kernel: &[f64]) -> Self {
        let mut planner = FftPlanner::new();
        let mut plan = FourierPlan {
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
            spectrum: Vec::new(),
        };
        let c = (ksize / 2) as isize;
        let mut embedded = vec![Complex64::new(0.0, 0.0); height * width];
        for a in 0..ksize {
            for b in 0..ksize {
                let r = (a as isize - c).rem_euclid(height as isize) as usize;
                let s = (b as isize - c).rem_euclid(width as isize) as usize;
                embedded[r * width + s].re += kernel[a * ksize + b];
            }
        }
        plan.transform(&mut embedded, height, width, false);
        plan.spectrum = embedded;
        plan
    }

    fn transform(&self, buf: &mut [Complex64], height: usize, width: usize, inverse: bool) {
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        for r in buf.chunks_exact_mut(width) {
            row.process(r);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); height];
        for j in 0..width {
            for i in 0..height {
                column[i] = buf[i * width + j];
            }
            col.process(&mut column);
            for i in 0..height {
                buf[i * width + j] = column[i];
            }
        }
        if inverse {
            let scale = 1.0 / (height * width) as f64;
            for z in buf.iter_mut() {
                *z *= scale;
            }
        }
    }

    fn filter(&self, v: &[f64], out: &mut [f64], height: usize, width: usize, conjugate: bool) {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut buf, height, width, false);
        for (z, h) in buf.iter_mut().zip(&self.spectrum) {
            *z *= if conjugate { h.conj() } else { *h };
        }
        self.transform(&mut buf, height, width, true);
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = z.re;
        }
    }
}

impl PeriodicBlur {
    pub fn new(
        height: usize,
        width: usize,
        ksize: usize,
        kernel: Vec<f64>,
        method: BlurMethod,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter("blur grid must be nonempty".into()));
        }
        if ksize % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "kernel size must be odd, got {ksize}"
            )));
        }
        check_len("blur kernel", ksize * ksize, kernel.len())?;
        let fourier = Arc::new(FourierPlan::new(height, width, ksize, &kernel));
        Ok(Self {
            height,
            width,
            ksize,
            kernel,
            method,
            fourier,
        })
    }

    /// Normalized `ksize x ksize` Gaussian of standard deviation `std`.
    /// A nonpositive `std` yields the delta kernel.
    pub fn gaussian(height: usize, width: usize, ksize: usize, std: f64) -> Result<Self> {
        let method = if ksize > 3 {
            BlurMethod::Fourier
        } else {
            BlurMethod::Direct
        };
        Self::new(height, width, ksize, gaussian_kernel(ksize, std), method)
    }

    pub fn with_method(&self, method: BlurMethod) -> Self {
        Self {
            method,
            ..self.clone()
        }
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn ksize(&self) -> usize {
        self.ksize
    }

    pub fn method(&self) -> BlurMethod {
        self.method
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Squared magnitude of the transfer function, i.e. the eigenvalues of
    /// `K^T K` in the Fourier basis.
    pub fn normal_spectrum(&self) -> Vec<f64> {
        self.fourier.spectrum.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Solves `(I + alpha * diag(d)) z = rhs` where `d` is `normal_spectrum`
    /// in the Fourier domain.
    pub(crate) fn solve_shifted_normal(&self, alpha: f64, rhs: &[f64], out: &mut [f64]) {
        let mut buf: Vec<Complex64> = rhs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let plan = &self.fourier;
        plan.transform(&mut buf, self.height, self.width, false);
        for (z, h) in buf.iter_mut().zip(&plan.spectrum) {
            *z /= 1.0 + alpha * h.norm_sqr();
        }
        plan.transform(&mut buf, self.height, self.width, true);
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = z.re;
        }
    }

    fn direct(&self, v: &[f64], out: &mut [f64], adjoint: bool) {
        let (h, w, k) = (self.height as isize, self.width as isize, self.ksize);
        let c = (k / 2) as isize;
        let sign = if adjoint { 1 } else { -1 };
        for i in 0..h {
            for j in 0..w {
                let mut acc = 0.0;
                for a in 0..k {
                    let r = (i + sign * (a as isize - c)).rem_euclid(h) as usize;
                    let row = &v[r * w as usize..(r + 1) * w as usize];
                    let krow = &self.kernel[a * k..(a + 1) * k];
                    for (b, kv) in krow.iter().enumerate() {
                        let s = (j + sign * (b as isize - c)).rem_euclid(w) as usize;
                        acc += kv * row[s];
                    }
                }
                out[(i * w + j) as usize] = acc;
            }
        }
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64], adjoint: bool) {
        match self.method {
            BlurMethod::Direct => self.direct(v, out, adjoint),
            BlurMethod::Fourier => self.fourier.filter(v, out, self.height, self.width, adjoint),
        }
    }
}

pub fn gaussian_kernel(ksize: usize, std: f64) -> Vec<f64> {
    let c = (ksize / 2) as f64;
    let mut k = vec![0.0; ksize * ksize];
    if std <= 0.0 {
        k[(ksize / 2) * ksize + ksize / 2] = 1.0;
        return k;
    }
    for a in 0..ksize {
        for b in 0..ksize {
            let (da, db) = (a as f64 - c, b as f64 - c);
            k[a * ksize + b] = (-(da * da + db * db) / (2.0 * std * std)).exp();
        }
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// A linear operator with forward and adjoint application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LinearMap {
    /// Row-major `rows x cols` matrix.
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    Identity {
        dim: usize,
    },
    NegatedIdentity {
        dim: usize,
    },
    ScaledIdentity {
        dim: usize,
        scale: f64,
    },
    /// Periodic forward differences, `h*w -> 2*h*w`.
    Grad2dPeriodic {
        height: usize,
        width: usize,
    },
    /// `-grad^T`, `2*h*w -> h*w`.
    Div2dPeriodic {
        height: usize,
        width: usize,
    },
    BlurPeriodic(PeriodicBlur),
    /// Row sums then column sums of an `n_s x n_t` plan.
    OtMarginal {
        n_s: usize,
        n_t: usize,
    },
}

impl LinearMap {
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("dense matrix data", rows * cols, data.len())?;
        Ok(LinearMap::Dense { rows, cols, data })
    }

    pub fn identity(dim: usize) -> Self {
        LinearMap::Identity { dim }
    }

    pub fn negated_identity(dim: usize) -> Self {
        LinearMap::NegatedIdentity { dim }
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        LinearMap::ScaledIdentity { dim, scale }
    }

    pub fn grad2d(height: usize, width: usize) -> Self {
        LinearMap::Grad2dPeriodic { height, width }
    }

    pub fn div2d(height: usize, width: usize) -> Self {
        LinearMap::Div2dPeriodic { height, width }
    }

    pub fn ot_marginal(n_s: usize, n_t: usize) -> Self {
        LinearMap::OtMarginal { n_s, n_t }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LinearMap::Dense { .. } => "dense",
            LinearMap::Identity { .. } => "identity",
            LinearMap::NegatedIdentity { .. } => "negated-identity",
            LinearMap::ScaledIdentity { .. } => "scaled-identity",
            LinearMap::Grad2dPeriodic { .. } => "grad2d-periodic",
            LinearMap::Div2dPeriodic { .. } => "div2d-periodic",
            LinearMap::BlurPeriodic(_) => "blur-periodic",
            LinearMap::OtMarginal { .. } => "ot-marginal",
        }
    }

    pub fn domain_dim(&self) -> usize {
        match self {
            LinearMap::Dense { cols, .. } => *cols,
            LinearMap::Identity { dim }
            | LinearMap::NegatedIdentity { dim }
            | LinearMap::ScaledIdentity { dim, .. } => *dim,
            LinearMap::Grad2dPeriodic { height, width } => height * width,
            LinearMap::Div2dPeriodic { height, width } => 2 * height * width,
            LinearMap::BlurPeriodic(b) => b.height * b.width,
            LinearMap::OtMarginal { n_s, n_t } => n_s * n_t,
        }
    }

    pub fn codomain_dim(&self) -> usize {
        match self {
            LinearMap::Dense { rows, .. } => *rows,
            LinearMap::Grad2dPeriodic { height, width } => 2 * height * width,
            LinearMap::Div2dPeriodic { height, width } => height * width,
            LinearMap::OtMarginal { n_s, n_t } => n_s + n_t,
            other => other.domain_dim(),
        }
    }

    /// `B = s I` for the identity-like kinds, `None` otherwise.
    pub fn identity_scale(&self) -> Option<f64> {
        match self {
            LinearMap::Identity { .. } => Some(1.0),
            LinearMap::NegatedIdentity { .. } => Some(-1.0),
            LinearMap::ScaledIdentity { scale, .. } => Some(*scale),
            _ => None,
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.codomain_dim()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.domain_dim()];
        self.adjoint_into(u, &mut out)?;
        Ok(out)
    }

    /// Writes `op * v` into `out`, overwriting it.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("operator input", self.domain_dim(), v.len())?;
        check_len("operator output", self.codomain_dim(), out.len())?;
        match self {
            LinearMap::Dense { cols, data, .. } => {
                for (o, row) in out.iter_mut().zip(data.chunks_exact(*cols)) {
                    *o = dot(row, v);
                }
            }
            LinearMap::Identity { .. } => out.copy_from_slice(v),
            LinearMap::NegatedIdentity { .. } => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o = -x;
                }
            }
            LinearMap::ScaledIdentity { scale, .. } => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o = scale * x;
                }
            }
            LinearMap::Grad2dPeriodic { height, width } => grad(*height, *width, v, out),
            LinearMap::Div2dPeriodic { height, width } => {
                grad_transpose(*height, *width, v, out);
                out.iter_mut().for_each(|o| *o = -*o);
            }
            LinearMap::BlurPeriodic(b) => b.apply_into(v, out, false),
            LinearMap::OtMarginal { n_s, n_t } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let (rows, cols) = out.split_at_mut(*n_s);
                for (i, plan_row) in v.chunks_exact(*n_t).enumerate() {
                    rows[i] = plan_row.iter().sum();
                    for (c, x) in cols.iter_mut().zip(plan_row) {
                        *c += x;
                    }
                }
            }
        }
        Ok(())
    }

    /// Writes `op^T * u` into `out`, overwriting it.
    pub fn adjoint_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("adjoint input", self.codomain_dim(), u.len())?;
        check_len("adjoint output", self.domain_dim(), out.len())?;
        match self {
            LinearMap::Dense { cols, data, .. } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (ui, row) in u.iter().zip(data.chunks_exact(*cols)) {
                    for (o, a) in out.iter_mut().zip(row) {
                        *o += a * ui;
                    }
                }
            }
            LinearMap::Identity { .. }
            | LinearMap::NegatedIdentity { .. }
            | LinearMap::ScaledIdentity { .. } => {
                // self-adjoint
                return self.apply_into(u, out);
            }
            LinearMap::Grad2dPeriodic { height, width } => grad_transpose(*height, *width, u, out),
            LinearMap::Div2dPeriodic { height, width } => {
                grad(*height, *width, u, out);
                out.iter_mut().for_each(|o| *o = -*o);
            }
            LinearMap::BlurPeriodic(b) => b.apply_into(u, out, true),
            LinearMap::OtMarginal { n_s, n_t } => {
                let (a, b) = u.split_at(*n_s);
                for (ai, plan_row) in a.iter().zip(out.chunks_exact_mut(*n_t)) {
                    for (x, bj) in plan_row.iter_mut().zip(b) {
                        *x = ai + bj;
                    }
                }
            }
        }
        Ok(())
    }

    /// Power iteration on `op^T op` from a seeded Gaussian start. Returns the
    /// square root of the last Rayleigh quotient.
    pub fn estimate_spectral_norm(&self, tol: f64, max_iter: usize, seed: u64) -> Result<f64> {
        if !(tol > 0.0) || max_iter == 0 {
            return Err(Error::InvalidParameter(
                "power iteration needs tol > 0 and max_iter >= 1".into(),
            ));
        }
        let n = self.domain_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let nv = norm(&v);
        if nv == 0.0 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mut av = vec![0.0; self.codomain_dim()];
        let mut z = vec![0.0; n];
        let mut estimate = 0.0;
        for _ in 0..max_iter {
            self.apply_into(&v, &mut av)?;
            self.adjoint_into(&av, &mut z)?;
            // Rayleigh quotient of A^T A at unit v
            let rayleigh = dot(&av, &av);
            let nz = norm(&z);
            if nz == 0.0 {
                return Ok(0.0);
            }
            let done = (rayleigh - estimate).abs() < tol;
            estimate = rayleigh;
            if done {
                break;
            }
            for (vi, zi) in v.iter_mut().zip(&z) {
                *vi = zi / nz;
            }
        }
        Ok(estimate.sqrt())
    }

    /// `||op(x_new) - op(x_old)|| / ||x_new - x_old||`, or `None` when the two
    /// points coincide.
    pub fn local_curvature(&self, x_new: &[f64], x_old: &[f64]) -> Result<Option<f64>> {
        check_len("local curvature", self.domain_dim(), x_new.len())?;
        check_len("local curvature", self.domain_dim(), x_old.len())?;
        let dx = sub(x_new, x_old);
        let ndx = norm(&dx);
        if ndx == 0.0 {
            return Ok(None);
        }
        Ok(Some(norm(&self.apply(&dx)?) / ndx))
    }
}

fn grad(h: usize, w: usize, x: &[f64], out: &mut [f64]) {
    let (gx, gy) = out.split_at_mut(h * w);
    for i in 0..h {
        let down = if i + 1 == h { 0 } else { i + 1 };
        for j in 0..w {
            let right = if j + 1 == w { 0 } else { j + 1 };
            let here = x[i * w + j];
            gx[i * w + j] = x[i * w + right] - here;
            gy[i * w + j] = x[down * w + j] - here;
        }
    }
}

fn grad_transpose(h: usize, w: usize, p: &[f64], out: &mut [f64]) {
    let (px, py) = p.split_at(h * w);
    for i in 0..h {
        let up = if i == 0 { h - 1 } else { i - 1 };
        for j in 0..w {
            let left = if j == 0 { w - 1 } else { j - 1 };
            let idx = i * w + j;
            out[idx] = px[i * w + left] - px[idx] + py[up * w + j] - py[idx];
        }
    }
}
