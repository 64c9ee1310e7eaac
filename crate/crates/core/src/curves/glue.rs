//! Cubic-tail surgery `[1 : f₁ + a/(z−p)³ : … : f_N + a/(z−p)³]` in
//! coordinates where the target point is `[1:0:…:0]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CurveRep, Jet};
use crate::numeric::bisect;
use crate::projective::{fs_distance, ProjectivePoint, Rotation, FS_SCALE};
use crate::{Error, Result};

/// Which supremum of the model tail `h_a = [1 : a/z³ : … : a/z³]` is pinned
/// to the calibration level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeNorm {
    /// `sup_{|z|≥1} d_FS(h_a(z), [1:0:…:0])`. Over all of `ℂ` this sup is
    /// the diameter for every `a > 0`, so the tail is measured outside the
    /// unit disk where the surgery is felt.
    Distance,
    /// `sup_{z∈ℂ} |dh_a|(z)`.
    Derivative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueConfig {
    pub norm: AmplitudeNorm,
    pub level: f64,
    /// Radius of the disk around `p` on which `f` must stay near `q`.
    pub probe_radius: f64,
    /// Allowed `d_FS(f(z), q)` on that disk.
    pub tolerance: f64,
    pub probe_resolution: usize,
}

impl Default for GlueConfig {
    fn default() -> Self {
        Self { norm: AmplitudeNorm::Distance, level: 0.1, probe_radius: 1.0, tolerance: 0.05, probe_resolution: 16 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Glued {
    inner: CurveRep,
    center: Complex64,
    target: ProjectivePoint,
    amplitude: f64,
    rotation: Rotation,
}

impl Glued {
    pub fn inner(&self) -> &CurveRep {
        &self.inner
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn target(&self) -> &ProjectivePoint {
        &self.target
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub(crate) fn jet(&self, z: Complex64) -> Jet {
        let j = self.inner.jet(z);
        let g = self.rotation.apply(&j.value);
        let dg = self.rotation.apply(&j.deriv);
        let a = self.amplitude;
        let zeta = z - self.center;
        let mut h = g.clone();
        let mut dh = dg.clone();
        if zeta.norm() >= 1.0 {
            let inv = zeta.inv();
            let t = a * inv * inv * inv;
            let dt = -3.0 * t * inv;
            for i in 1..g.len() {
                h[i] = g[i] + t * g[0];
                dh[i] = dg[i] + t * dg[0] + dt * g[0];
            }
        } else {
            // Multiplied through by ζ³ so the pole at p stays finite.
            let z2 = zeta * zeta;
            let z3 = z2 * zeta;
            h[0] = z3 * g[0];
            dh[0] = 3.0 * z2 * g[0] + z3 * dg[0];
            for i in 1..g.len() {
                h[i] = z3 * g[i] + a * g[0];
                dh[i] = 3.0 * z2 * g[i] + z3 * dg[i] + a * dg[0];
            }
        }
        Jet { value: self.rotation.apply_inverse(&h), deriv: self.rotation.apply_inverse(&dh) }
    }
}

/// Supremum of the model tail in `ℂP^N` for amplitude `a`, over a radial
/// grid (the tail depends on `|z|` only), polished by golden-section search.
pub fn model_sup(n: usize, amplitude: f64, norm: AmplitudeNorm) -> f64 {
    let k = (n as f64).sqrt() * amplitude;
    match norm {
        AmplitudeNorm::Distance => {
            // Decreasing in r, so the radial grid max sits at r = 1.
            let radii = (0..=400).map(|i| 10f64.powf(i as f64 * 0.01));
            radii.map(|r| FS_SCALE * (k / r.powi(3)).atan()).fold(0.0, f64::max)
        }
        AmplitudeNorm::Derivative => {
            // |dh| = (1/√π)·3k r⁻⁴/(1 + k² r⁻⁶) along a ray.
            let profile = |r: f64| FS_SCALE * 3.0 * k * r.powi(-4) / (1.0 + k * k * r.powi(-6));
            let center = k.cbrt();
            let (mut best_i, mut best) = (0, -1.0);
            let grid: Vec<f64> = (0..=600).map(|i| center * 10f64.powf(-3.0 + i as f64 * 0.01)).collect();
            for (i, &r) in grid.iter().enumerate() {
                let v = profile(r);
                if v > best {
                    best = v;
                    best_i = i;
                }
            }
            let mut lo = grid[best_i.saturating_sub(1)];
            let mut hi = grid[(best_i + 1).min(grid.len() - 1)];
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..200 {
                let x1 = hi - phi * (hi - lo);
                let x2 = lo + phi * (hi - lo);
                if profile(x1) < profile(x2) {
                    lo = x1;
                } else {
                    hi = x2;
                }
            }
            best.max(profile(0.5 * (lo + hi)))
        }
    }
}

/// Amplitude whose model tail has supremum `config.level`.
pub fn solve_amplitude(n: usize, config: &GlueConfig) -> Result<f64> {
    let hi = match config.norm {
        AmplitudeNorm::Distance => 1.0,
        AmplitudeNorm::Derivative => 1e6,
    };
    let target = config.level;
    let g = |a: f64| model_sup(n, a, config.norm) - target;
    // The derivative sup decreases with a; flip so the bracket is ordered.
    let sign = if g(1e-12) < 0.0 { 1.0 } else { -1.0 };
    if sign * g(hi) < 0.0 {
        return Err(Error::Numeric(format!("gluing amplitude for level {target} is not bracketed by (0, {hi}]")));
    }
    bisect(|a| sign * g(a), 1e-12, hi, 1e-15 * hi)
        .ok_or_else(|| Error::Numeric("gluing amplitude bisection failed".into()))
}

/// Glues the cubic tail at `p` towards `q`, after checking that `f` stays
/// within `config.tolerance` of `q` on the probe disk.
pub fn glue(curve: &CurveRep, p: Complex64, q: &ProjectivePoint, config: &GlueConfig) -> Result<CurveRep> {
    if q.dim() != curve.dim() {
        return Err(Error::DimensionMismatch { expected: curve.dim() + 1, found: q.dim() + 1 });
    }
    let res = config.probe_resolution.max(2);
    let r = config.probe_radius;
    let mut worst: f64 = 0.0;
    for i in 0..res {
        for j in 0..res {
            let x = -r + 2.0 * r * (i as f64 + 0.5) / res as f64;
            let y = -r + 2.0 * r * (j as f64 + 0.5) / res as f64;
            if x * x + y * y > r * r {
                continue;
            }
            worst = worst.max(fs_distance(&curve.jet(p + Complex64::new(x, y)).point(), q));
        }
    }
    worst = worst.max(fs_distance(&curve.jet(p).point(), q));
    if worst >= config.tolerance {
        return Err(Error::NotLocallyConstant { max_distance: worst, delta: config.tolerance });
    }
    let amplitude = solve_amplitude(curve.dim(), config)?;
    glue_with_amplitude(curve, p, q, amplitude)
}

pub fn glue_with_amplitude(curve: &CurveRep, p: Complex64, q: &ProjectivePoint, amplitude: f64) -> Result<CurveRep> {
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidParameter(format!("gluing amplitude must be positive, got {amplitude}")));
    }
    if q.dim() != curve.dim() {
        return Err(Error::DimensionMismatch { expected: curve.dim() + 1, found: q.dim() + 1 });
    }
    Ok(CurveRep::Glued(Box::new(Glued {
        inner: curve.clone(),
        center: p,
        target: q.clone(),
        amplitude,
        rotation: Rotation::to_origin(q),
    })))
}
