//! Rate-distortion of quantised continuous sources on uniform grids, where
//! the distortion depends only on the displacement and each alternating
//! minimisation step is a pair of FFT convolutions.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::ba::{validate_ladder, BaConfig, RdEstimate};
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridMetric {
    Euclidean,
    /// `max(|Δx|, |Δy|)`.
    Max,
}

impl GridMetric {
    fn eval(self, dx: f64, dy: f64) -> f64 {
        match self {
            GridMetric::Euclidean => dx.hypot(dy),
            GridMetric::Max => dx.abs().max(dy.abs()),
        }
    }
}

/// A pmf on the `nx × ny` grid of spacing `spacing`; reproduction points
/// range over the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSource {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub probs: Vec<f64>,
}

impl GridSource {
    pub fn new(nx: usize, ny: usize, spacing: f64, probs: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 || probs.len() != nx * ny || !(spacing > 0.0) {
            return Err(Error::Validation(format!("grid source of shape {nx}×{ny} has {} entries", probs.len())));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (pairwise_sum(&probs) - 1.0).abs() > 1e-12 {
            return Err(Error::Validation("grid source must be a pmf".into()));
        }
        Ok(Self { nx, ny, spacing, probs })
    }

    fn from_mask(nx: usize, ny: usize, spacing: f64, mask: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let weights: Vec<f64> = (0..nx * ny).map(|k| if mask(k % nx, k / nx) { 1.0 } else { 0.0 }).collect();
        let count = weights.iter().sum::<f64>();
        if count == 0.0 {
            return Err(Error::Validation("grid source has empty support".into()));
        }
        Self::new(nx, ny, spacing, weights.into_iter().map(|w| w / count).collect())
    }
}

/// Uniform on `[0, length]`, one atom per cell centre.
pub fn interval_source(length: f64, spacing: f64) -> Result<GridSource> {
    let n = cells(length, spacing)?;
    GridSource::from_mask(n, 1, length / n as f64, |_, _| true)
}

/// Uniform on `[0, side]²`.
pub fn square_source(side: f64, spacing: f64) -> Result<GridSource> {
    let n = cells(side, spacing)?;
    GridSource::from_mask(n, n, side / n as f64, |_, _| true)
}

/// Uniform on the disk of the given radius: the cells whose centres lie
/// inside.
pub fn disk_source(radius: f64, spacing: f64) -> Result<GridSource> {
    let n = cells(2.0 * radius, spacing)?;
    let h = 2.0 * radius / n as f64;
    GridSource::from_mask(n, n, h, |i, j| {
        let x = (i as f64 + 0.5) * h - radius;
        let y = (j as f64 + 0.5) * h - radius;
        x * x + y * y <= radius * radius
    })
}

fn cells(length: f64, spacing: f64) -> Result<usize> {
    if !(length > 0.0) || !(spacing > 0.0) || !(length / spacing).is_finite() {
        return Err(Error::InvalidParameter(format!("bad grid: length {length}, spacing {spacing}")));
    }
    let n = (length / spacing - 1e-9).ceil().max(1.0) as usize;
    if n > 1 << 13 {
        return Err(Error::InvalidParameter(format!("grid of {n} cells per side is too fine")));
    }
    Ok(n)
}

fn fast_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for f in [2, 3, 5] {
            while m.is_multiple_of(f) {
                m /= f;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Real linear convolution with a fixed even kernel on an `nx × ny` grid.
struct Convolver {
    nx: usize,
    ny: usize,
    rx: i64,
    ry: i64,
    mx: usize,
    my: usize,
    forward_x: Arc<dyn Fft<f64>>,
    inverse_x: Arc<dyn Fft<f64>>,
    forward_y: Arc<dyn Fft<f64>>,
    inverse_y: Arc<dyn Fft<f64>>,
}

impl Convolver {
    fn new(nx: usize, ny: usize, rx: usize, ry: usize) -> Self {
        let mx = fast_size(nx + rx);
        let my = if ny == 1 { 1 } else { fast_size(ny + ry) };
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            rx: rx as i64,
            ry: ry as i64,
            mx,
            my,
            forward_x: planner.plan_fft_forward(mx),
            inverse_x: planner.plan_fft_inverse(mx),
            forward_y: planner.plan_fft_forward(my),
            inverse_y: planner.plan_fft_inverse(my),
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let (fx, fy) = if inverse { (&self.inverse_x, &self.inverse_y) } else { (&self.forward_x, &self.forward_y) };
        buf.par_chunks_mut(self.mx).for_each(|row| fx.process(row));
        if self.my > 1 {
            let mut t = transpose(buf, self.mx, self.my);
            t.par_chunks_mut(self.my).for_each(|col| fy.process(col));
            buf.copy_from_slice(&transpose(&t, self.my, self.mx));
        }
    }

    /// Spectrum of `k(dx, dy)` truncated to the kernel reach.
    fn kernel_spectrum(&self, k: impl Fn(i64, i64) -> f64 + Sync) -> Vec<Complex64> {
        let (mx, my) = (self.mx as i64, self.my as i64);
        let wrap = |i: i64, m: i64| if i <= m / 2 { i } else { i - m };
        let mut buf: Vec<Complex64> = (0..mx * my)
            .into_par_iter()
            .map(|idx| {
                let (dx, dy) = (wrap(idx % mx, mx), wrap(idx / mx, my));
                let v = if dx.abs() <= self.rx && dy.abs() <= self.ry { k(dx, dy) } else { 0.0 };
                Complex64::new(v, 0.0)
            })
            .collect();
        self.transform(&mut buf, false);
        buf
    }

    fn apply(&self, input: &[f64], spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.mx * self.my];
        for j in 0..self.ny {
            for i in 0..self.nx {
                buf[j * self.mx + i].re = input[j * self.nx + i];
            }
        }
        self.transform(&mut buf, false);
        buf.par_iter_mut().zip(spectrum.par_iter()).for_each(|(b, s)| *b *= s);
        self.transform(&mut buf, true);
        let scale = 1.0 / (self.mx * self.my) as f64;
        let mut out = vec![0.0; self.nx * self.ny];
        for j in 0..self.ny {
            for i in 0..self.nx {
                out[j * self.nx + i] = (buf[j * self.mx + i].re * scale).max(0.0);
            }
        }
        out
    }
}

fn transpose(buf: &[Complex64], w: usize, h: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); buf.len()];
    for j in 0..h {
        for i in 0..w {
            out[i * h + j] = buf[j * w + i];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRdPoint {
    pub slope: f64,
    pub distortion: f64,
    /// `−Σ p log Z − sD` in bits: the mutual information of the final
    /// channel against the iterate's reproduction law, an upper bound on the
    /// channel's information that is tight at convergence.
    pub rate: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Kernel reach beyond which `exp(−s ρ)` drops under `e^{−42}`.
fn reach(slope: f64, spacing: f64, n: usize) -> usize {
    if slope <= 0.0 {
        return n.saturating_sub(1);
    }
    ((42.0 / (slope * spacing)).ceil() as usize).min(n.saturating_sub(1))
}

fn grid_ba(
    source: &GridSource,
    metric: GridMetric,
    slope: f64,
    cfg: &BaConfig,
    init: Option<&[f64]>,
) -> (GridRdPoint, Vec<f64>) {
    let (nx, ny, h) = (source.nx, source.ny, source.spacing);
    let conv = Convolver::new(nx, ny, reach(slope, h, nx), reach(slope, h, ny));
    let kernel = |dx: i64, dy: i64| (-slope * h * metric.eval(dx as f64, dy as f64)).exp();
    let k_hat = conv.kernel_spectrum(kernel);
    let kd_hat = conv.kernel_spectrum(|dx, dy| kernel(dx, dy) * h * metric.eval(dx as f64, dy as f64));
    let p = &source.probs;
    let mut q: Vec<f64> = match init {
        Some(v) if v.len() == p.len() => v.to_vec(),
        _ => p.clone(),
    };
    let lagrangian = |z: &[f64]| -> f64 {
        let terms: Vec<f64> = p.iter().zip(z).map(|(&pi, &zi)| if pi > 0.0 { -pi * zi.ln() } else { 0.0 }).collect();
        pairwise_sum(&terms)
    };
    let mut z = conv.apply(&q, &k_hat);
    let mut value = lagrangian(&z);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let ratio: Vec<f64> = p.iter().zip(&z).map(|(&pi, &zi)| if pi > 0.0 { pi / zi } else { 0.0 }).collect();
        let back = conv.apply(&ratio, &k_hat);
        let mut next: Vec<f64> = q.iter().zip(&back).map(|(a, b)| a * b).collect();
        let total = pairwise_sum(&next);
        next.iter_mut().for_each(|v| *v /= total);
        q = next;
        z = conv.apply(&q, &k_hat);
        let new_value = lagrangian(&z);
        let change = (value - new_value).abs();
        value = new_value;
        if change <= cfg.tolerance * value.abs().max(1e-12) {
            converged = true;
            break;
        }
    }
    let zd = conv.apply(&q, &kd_hat);
    let terms: Vec<f64> = (0..p.len()).map(|k| if p[k] > 0.0 { p[k] * zd[k] / z[k] } else { 0.0 }).collect();
    let distortion = pairwise_sum(&terms);
    let rate = ((value - slope * distortion) / std::f64::consts::LN_2).max(0.0);
    (GridRdPoint { slope, distortion, rate, iterations, converged }, q)
}

/// Distortion with a single reproduction point at the best grid location.
fn zero_rate_distortion(source: &GridSource, metric: GridMetric) -> f64 {
    let conv = Convolver::new(source.nx, source.ny, source.nx - 1, source.ny.saturating_sub(1));
    let spectrum = conv.kernel_spectrum(|dx, dy| source.spacing * metric.eval(dx as f64, dy as f64));
    conv.apply(&source.probs, &spectrum).into_iter().fold(f64::INFINITY, f64::min)
}

/// Rate at distortion `target` for a grid source, locating the slope by a
/// safeguarded secant iteration on `log D` against `log s`.
pub fn grid_rate_at_distortion(
    source: &GridSource,
    metric: GridMetric,
    target: f64,
    cfg: &BaConfig,
) -> Result<GridRdPoint> {
    if !(target > 0.0) {
        return Err(Error::Infeasible { target, minimum: 0.0 });
    }
    if target >= zero_rate_distortion(source, metric) {
        return Ok(GridRdPoint { slope: 0.0, distortion: target, rate: 0.0, iterations: 0, converged: true });
    }
    let dim = if source.ny == 1 { 1.0 } else { 2.0 };
    let mut s = dim / target;
    let (mut point, mut q) = grid_ba(source, metric, s, cfg, None);
    // (log s, log(D/target)) on either side of the target.
    let mut lo: Option<(f64, f64)> = None;
    let mut hi: Option<(f64, f64)> = None;
    for _ in 0..40 {
        let err = (point.distortion / target).ln();
        if err.abs() <= 1e-6 {
            break;
        }
        if err > 0.0 {
            lo = Some((s.ln(), err));
        } else {
            hi = Some((s.ln(), err));
        }
        let next = match (lo, hi) {
            (Some((a, fa)), Some((b, fb))) => {
                let secant = a - fa * (b - a) / (fb - fa);
                if secant > a.min(b) && secant < a.max(b) {
                    secant
                } else {
                    0.5 * (a + b)
                }
            }
            _ => s.ln() + err,
        };
        s = next.exp();
        let (p, qn) = grid_ba(source, metric, s, cfg, Some(&q));
        point = p;
        q = qn;
    }
    Ok(point)
}

/// Rate-distortion ladder of a source rebuilt at each rung by `build(ε)`.
fn ladder_estimate<F>(ladder: &[f64], metric: GridMetric, cfg: &BaConfig, build: F) -> Result<RdEstimate>
where
    F: Fn(f64) -> Result<GridSource>,
{
    validate_ladder(ladder)?;
    let mut points = Vec::with_capacity(ladder.len());
    let mut converged = true;
    for &e in ladder {
        let p = grid_rate_at_distortion(&build(e)?, metric, e, cfg)?;
        converged &= p.converged;
        points.push((p.distortion, p.rate));
    }
    RdEstimate::from_points(points, converged)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KawabataDemboReport {
    pub dimension: usize,
    pub estimate: RdEstimate,
    /// `(s log₂(1/ε) − R(ε)) / (s + 1)` per rung.
    pub constants: Vec<f64>,
    /// Largest of `constants`: the smallest `K` consistent with the ladder.
    pub constant: f64,
    pub pass: bool,
}

/// Rate-distortion slope of the uniform law on `[0,1]^s` under the max
/// metric; passes when the slope is at least `s − 0.1`.
pub fn kawabata_dembo_probe(dimension: usize, ladder: &[f64], cells_per_epsilon: f64) -> Result<KawabataDemboReport> {
    if !(dimension == 1 || dimension == 2) {
        return Err(Error::InvalidParameter(format!("probe dimension must be 1 or 2, got {dimension}")));
    }
    if !(cells_per_epsilon >= 1.0) {
        return Err(Error::InvalidParameter(format!("need at least one cell per ε, got {cells_per_epsilon}")));
    }
    let cfg = BaConfig { tolerance: 1e-10, max_iterations: 10_000 };
    let estimate = ladder_estimate(ladder, GridMetric::Max, &cfg, |e| {
        if dimension == 1 {
            interval_source(1.0, e / cells_per_epsilon)
        } else {
            square_source(1.0, e / cells_per_epsilon)
        }
    })?;
    let s = dimension as f64;
    let constants: Vec<f64> = estimate.points.iter().map(|(d, r)| (s * (1.0 / d).log2() - r) / (s + 1.0)).collect();
    let constant = constants.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    Ok(KawabataDemboReport { dimension, pass: estimate.slope >= s - 0.1, estimate, constants, constant })
}
