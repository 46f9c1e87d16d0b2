//! Chan-Vese and edge-weighted energies on a pixel grid.
//!
//! Sign convention: the object is `{phi < 0}`. `H(phi)` is therefore the
//! background indicator, `c1` is the background mean and `c2` the object
//! mean.
//!
//! The discrete energy is
//!
//! ```text
//! E = mu * sum g * |grad+ H(phi)|_eta
//!   + lambda1 * sum (I - c1)^2 * H(phi)
//!   + lambda2 * sum (I - c2)^2 * (1 - H(phi))
//! ```
//!
//! with forward differences (zero past the last row/column) and
//! `|v|_eta = sqrt(|v|^2 + eta^2)`. The length term is the total variation
//! of `H(phi)`, which equals `integral g dirac(phi) |grad phi|` in the
//! continuum but whose exact gradient carries no `dirac'` term.
//! [`descent_direction`] is the exact negative gradient of this sum with the
//! region means held fixed.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{gradient_magnitude, ScalarField};

/// Denominator floor for the region means.
pub const MIN_REGION_MASS: f64 = 1e-12;

/// Arctan-smoothed Heaviside and Dirac pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothing {
    eps: f64,
}

impl Smoothing {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "smoothing width must be finite and > 0, got {eps}"
            )));
        }
        Ok(Self { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `1/2 * (1 + 2/pi * atan(z / eps))`
    #[inline]
    pub fn heaviside(&self, z: f64) -> f64 {
        0.5 * (1.0 + (2.0 / PI) * (z / self.eps).atan())
    }

    /// `eps / (pi * (eps^2 + z^2))`
    #[inline]
    pub fn dirac(&self, z: f64) -> f64 {
        self.eps / (PI * (self.eps * self.eps + z * z))
    }

    #[inline]
    pub fn dirac_derivative(&self, z: f64) -> f64 {
        let s = self.eps * self.eps + z * z;
        -2.0 * self.eps * z / (PI * s * s)
    }
}

pub fn smoothed_heaviside(z: f64, eps: f64) -> Result<f64> {
    Smoothing::new(eps).map(|s| s.heaviside(z))
}

pub fn smoothed_dirac(z: f64, eps: f64) -> Result<f64> {
    Smoothing::new(eps).map(|s| s.dirac(z))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Length weight.
    pub mu: f64,
    /// Background data weight.
    pub lambda1: f64,
    /// Object data weight.
    pub lambda2: f64,
    pub heaviside_eps: f64,
    /// Regularizer `eta` for `|grad H(phi)|`.
    pub grad_floor: f64,
    /// Intensity scale applied before the edge indicator's gradient.
    pub edge_scale: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            mu: 10.0,
            lambda1: 1.0,
            lambda2: 1.0,
            heaviside_eps: 1.0,
            grad_floor: 1e-8,
            edge_scale: EDGE_INTENSITY_SCALE,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.grad_floor > 0.0) || !self.grad_floor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grad_floor must be finite and > 0, got {}",
                self.grad_floor
            )));
        }
        if !(self.edge_scale > 0.0) || !self.edge_scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "edge_scale must be finite and > 0, got {}",
                self.edge_scale
            )));
        }
        Smoothing::new(self.heaviside_eps).map(|_| ())
    }

    /// Largest explicit step for which the length term is stable:
    /// `1 / (4 mu max(g) dirac(0))`. Infinite when `mu == 0`.
    pub fn stable_step(&self, g: Option<&ScalarField>) -> Result<f64> {
        let s = self.smoothing()?;
        let g_max = g.map_or(1.0, |g| g.max_value());
        let stiffness = self.mu * g_max * s.dirac(0.0);
        Ok(if stiffness > 0.0 {
            0.25 / stiffness
        } else {
            f64::INFINITY
        })
    }

    fn smoothing(&self) -> Result<Smoothing> {
        Smoothing::new(self.heaviside_eps)
    }
}

/// Smoothed region means; `c1` over `H(phi)` (background), `c2` over
/// `1 - H(phi)` (object).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats {
    pub c1: f64,
    pub c2: f64,
    pub n1: f64,
    pub n2: f64,
}

/// Normalized sampled Gaussian of odd `size`, row-major.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    assert!(size % 2 == 1, "kernel size must be odd");
    let half = (size / 2) as isize;
    let mut k = Vec::with_capacity(size * size);
    for dy in -half..=half {
        for dx in -half..=half {
            let r2 = (dx * dx + dy * dy) as f64;
            k.push((-r2 / (2.0 * sigma * sigma)).exp());
        }
    }
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Convolution with replicate padding.
pub fn convolve(image: &ScalarField, kernel: &[f64], size: usize) -> ScalarField {
    let (w, h) = image.dims();
    let half = (size / 2) as isize;
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (ki, dy) in (-half..=half).enumerate() {
                for (kj, dx) in (-half..=half).enumerate() {
                    acc += kernel[ki * size + kj] * image.get_clamped(r as isize + dy, c as isize + dx);
                }
            }
            out[r * w + c] = acc;
        }
    }
    ScalarField::from_raw(w, h, out)
}

pub const EDGE_KERNEL_SIZE: usize = 5;
pub const EDGE_KERNEL_SIGMA: f64 = 0.5;
/// Default edge scale: gradients are measured in 8-bit grey levels.
pub const EDGE_INTENSITY_SCALE: f64 = 255.0;

/// `g = 1 / (1 + |grad(G * s I)|^2)` with a 5x5, sigma 0.5 Gaussian and
/// `s` = [`EDGE_INTENSITY_SCALE`].
pub fn edge_indicator(image: &ScalarField) -> ScalarField {
    edge_indicator_with(image, EDGE_INTENSITY_SCALE)
}

/// Edge indicator with an explicit intensity scale `s`; `s = 1` measures
/// gradients of the normalized image directly.
pub fn edge_indicator_with(image: &ScalarField, scale: f64) -> ScalarField {
    let kernel = gaussian_kernel(EDGE_KERNEL_SIZE, EDGE_KERNEL_SIGMA);
    let smooth = convolve(image, &kernel, EDGE_KERNEL_SIZE);
    let grad = gradient_magnitude(&smooth);
    let values = grad
        .values()
        .iter()
        .map(|&t| 1.0 / (1.0 + (scale * t).powi(2)))
        .collect();
    ScalarField::from_raw(image.width(), image.height(), values)
}

pub fn region_means(image: &ScalarField, phi: &ScalarField, eps: f64) -> Result<RegionStats> {
    image.ensure_same_dims(phi, "region means")?;
    let s = Smoothing::new(eps)?;
    let (mut m1, mut n1, mut m2, mut n2) = (0.0, 0.0, 0.0, 0.0);
    for (&i, &p) in image.values().iter().zip(phi.values()) {
        let hv = s.heaviside(p);
        m1 += i * hv;
        n1 += hv;
        m2 += i * (1.0 - hv);
        n2 += 1.0 - hv;
    }
    if n1 <= MIN_REGION_MASS {
        return Err(Error::collapse(None, "background region (c1) has vanished"));
    }
    if n2 <= MIN_REGION_MASS {
        return Err(Error::collapse(None, "object region (c2) has vanished"));
    }
    Ok(RegionStats {
        c1: m1 / n1,
        c2: m2 / n2,
        n1,
        n2,
    })
}

/// Individual energy terms (already weighted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    pub length: f64,
    pub background: f64,
    pub object: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.length + self.background + self.object
    }
}

/// Forward differences of a row-major grid at `k`, zero past the far edges.
#[inline]
fn forward_diffs(v: &[f64], w: usize, h: usize, k: usize) -> (f64, f64) {
    let (r, c) = (k / w, k % w);
    let dx = if c + 1 < w { v[k + 1] - v[k] } else { 0.0 };
    let dy = if r + 1 < h { v[k + w] - v[k] } else { 0.0 };
    (dx, dy)
}

fn check_inputs(image: &ScalarField, phi: &ScalarField, g: Option<&ScalarField>) -> Result<()> {
    image.ensure_same_dims(phi, "energy")?;
    if let Some(g) = g {
        g.ensure_same_dims(phi, "edge indicator")?;
    }
    Ok(())
}

/// `g = None` means `g == 1` (plain Chan-Vese length).
pub fn energy_terms(
    image: &ScalarField,
    phi: &ScalarField,
    stats: &RegionStats,
    g: Option<&ScalarField>,
    params: &EnergyParams,
) -> Result<EnergyTerms> {
    params.validate()?;
    check_inputs(image, phi, g)?;
    let s = params.smoothing()?;
    let eta2 = params.grad_floor * params.grad_floor;
    let (w, h) = phi.dims();
    let hv: Vec<f64> = phi.values().iter().map(|&p| s.heaviside(p)).collect();
    let mut length = 0.0;
    let mut background = 0.0;
    let mut object = 0.0;
    for k in 0..w * h {
        let (dx, dy) = forward_diffs(&hv, w, h, k);
        let gv = g.map_or(1.0, |g| g.values()[k]);
        length += gv * (dx * dx + dy * dy + eta2).sqrt();
        let i = image.values()[k];
        background += (i - stats.c1).powi(2) * hv[k];
        object += (i - stats.c2).powi(2) * (1.0 - hv[k]);
    }
    Ok(EnergyTerms {
        length: params.mu * length,
        background: params.lambda1 * background,
        object: params.lambda2 * object,
    })
}

pub fn total_energy(
    image: &ScalarField,
    phi: &ScalarField,
    stats: &RegionStats,
    g: Option<&ScalarField>,
    params: &EnergyParams,
) -> Result<f64> {
    energy_terms(image, phi, stats, g, params).map(|t| t.total())
}

/// Negative gradient of [`total_energy`] with respect to every node of `phi`.
///
/// This is `dirac(phi) * (mu * div-(g p) - lambda1 (I - c1)^2 + lambda2 (I - c2)^2)`
/// with `p = grad+ H / |grad+ H|_eta` and `div-` the backward-difference
/// adjoint of `grad+`, i.e. the usual Chan-Vese velocity.
pub fn descent_direction(
    image: &ScalarField,
    phi: &ScalarField,
    stats: &RegionStats,
    g: Option<&ScalarField>,
    params: &EnergyParams,
) -> Result<ScalarField> {
    params.validate()?;
    check_inputs(image, phi, g)?;
    let s = params.smoothing()?;
    let eta2 = params.grad_floor * params.grad_floor;
    let (w, h) = phi.dims();
    let n = w * h;
    let hv: Vec<f64> = phi.values().iter().map(|&p| s.heaviside(p)).collect();

    // flux mu * g * grad+ H / |grad+ H|_eta
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    for k in 0..n {
        let (dx, dy) = forward_diffs(&hv, w, h, k);
        let norm = (dx * dx + dy * dy + eta2).sqrt();
        let weight = params.mu * g.map_or(1.0, |g| g.values()[k]) / norm;
        px[k] = weight * dx;
        py[k] = weight * dy;
    }
    let values = (0..n)
        .map(|k| {
            let (r, c) = (k / w, k % w);
            let west = if c > 0 { px[k - 1] } else { 0.0 };
            let north = if r > 0 { py[k - w] } else { 0.0 };
            let div = px[k] - west + py[k] - north;
            let i = image.values()[k];
            let data = params.lambda1 * (i - stats.c1).powi(2) - params.lambda2 * (i - stats.c2).powi(2);
            s.dirac(phi.values()[k]) * (div - data)
        })
        .collect();
    ScalarField::new(w, h, values)
}

/// One explicit descent step `phi + dt * direction`.
pub fn evolution_step(
    phi: &ScalarField,
    image: &ScalarField,
    stats: &RegionStats,
    g: Option<&ScalarField>,
    params: &EnergyParams,
    dt: f64,
) -> Result<ScalarField> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be finite and > 0, got {dt}")));
    }
    let dir = descent_direction(image, phi, stats, g, params)?;
    phi.linear_combination(1.0, &dir, dt)
}
