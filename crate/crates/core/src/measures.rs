//! Samplers for translation-invariant measures on curve space and Monte
//! Carlo expectations.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{
    energy_density, nsa_characteristic_with, psi, rescale, translate, CurveRep, DensitySearch, LatticeSum,
};
use crate::numeric::{mean_ci95, pairwise_sum};
use crate::projective::fs_distance;
use crate::rng::{self, tag};
use crate::{Error, Result};

/// Parameters of the random lattice family: window coefficients uniform on
/// the disk `|u − a| ≤ 1`, offset uniform on the cell, and the mean
/// coefficient `a` on the lattice beyond the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub period: f64,
    pub a_center: f64,
    /// Window half-width in cells.
    pub cells: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

impl FamilyParams {
    pub fn new(period: f64, a_center: f64, cells: usize, seed: u64) -> Result<Self> {
        let p = Self { period, a_center, cells, n: 1, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::InvalidParameter(format!("family period must be positive, got {}", self.period)));
        }
        if !(self.a_center > 0.0) || !self.a_center.is_finite() {
            return Err(Error::InvalidParameter(format!("family centre must be positive, got {}", self.a_center)));
        }
        if self.cells < 3 {
            return Err(Error::InvalidParameter(format!("family window needs at least 3 cells, got {}", self.cells)));
        }
        if self.n != 1 {
            return Err(Error::UnsupportedMeasure(format!("the lattice family maps into CP^1, not CP^{}", self.n)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSampler {
    LatticeFamily(FamilyParams),
    /// `T^u f` with `u` uniform on `[0, L]²`, for a `Λ`-periodic `f`.
    PeriodicOrbit { curve: CurveRep, period: f64, seed: u64 },
    /// `T^u g` with `g` drawn from `base` and `u` uniform on `[0, side]²`.
    TranslatedAverage { base: Box<MeasureSampler>, side: f64, seed: u64 },
    /// Push-forward under `f ↦ f(λ·)`.
    Rescaled { base: Box<MeasureSampler>, factor: f64 },
}

/// How the translation or offset uniforms of successive samples are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    #[default]
    Iid,
    /// Jittered `k × k` grid over the unit square for the first `k²`
    /// samples (`k` the largest even integer with `k² ≤ n`), i.i.d. for the
    /// rest. Every sample keeps the exact uniform marginal. Intervals use
    /// the collapsed-strata variance estimate over horizontally adjacent
    /// pairs, which is conservative.
    Stratified,
}

impl MeasureSampler {
    pub fn lattice_family(params: FamilyParams) -> Result<Self> {
        params.validate()?;
        Ok(MeasureSampler::LatticeFamily(params))
    }

    /// Checks `d_FS(f(z), f(z+λ)) < 10⁻⁹` for both generators on probes.
    pub fn periodic_orbit(curve: CurveRep, period: f64, seed: u64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter(format!("orbit period must be positive, got {period}")));
        }
        let mut r = rng::stream(seed, &[tag::PROBE]);
        for _ in 0..64 {
            let z = Complex64::new(r.gen_range(0.0..period), r.gen_range(0.0..period));
            let p = curve.jet(z).point();
            for step in [Complex64::new(period, 0.0), Complex64::new(0.0, period)] {
                let d = fs_distance(&p, &curve.jet(z + step).point());
                if !(d < 1e-9) {
                    return Err(Error::InvalidParameter(format!(
                        "curve is not {period}-periodic: d_FS(f(z), f(z+λ)) = {d:e} at z = {z}"
                    )));
                }
            }
        }
        Ok(MeasureSampler::PeriodicOrbit { curve, period, seed })
    }

    pub fn dim(&self) -> usize {
        match self {
            MeasureSampler::LatticeFamily(p) => p.n,
            MeasureSampler::PeriodicOrbit { curve, .. } => curve.dim(),
            MeasureSampler::TranslatedAverage { base, .. } | MeasureSampler::Rescaled { base, .. } => base.dim(),
        }
    }

    fn seed(&self) -> u64 {
        match self {
            MeasureSampler::LatticeFamily(p) => p.seed,
            MeasureSampler::PeriodicOrbit { seed, .. } | MeasureSampler::TranslatedAverage { seed, .. } => *seed,
            MeasureSampler::Rescaled { base, .. } => base.seed(),
        }
    }

    /// The `index`-th draw.
    pub fn sample(&self, index: u64) -> CurveRep {
        let mut r = rng::stream(self.seed(), &[tag::OFFSET, index]);
        let u = [r.gen::<f64>(), r.gen::<f64>()];
        self.sample_with_uniforms(index, u)
    }

    /// The `index`-th draw with the outermost offset/translation taken from
    /// the unit-square point `u`.
    pub fn sample_with_uniforms(&self, index: u64, u: [f64; 2]) -> CurveRep {
        match self {
            MeasureSampler::LatticeFamily(p) => sample_lattice(p, index, u),
            MeasureSampler::PeriodicOrbit { curve, period, .. } => {
                translate(curve, Complex64::new(u[0], u[1]) * *period)
            }
            MeasureSampler::TranslatedAverage { base, side, .. } => {
                translate(&base.sample(index), Complex64::new(u[0], u[1]) * *side)
            }
            MeasureSampler::Rescaled { base, factor } => {
                rescale(&base.sample_with_uniforms(index, u), *factor).expect("validated factor")
            }
        }
    }

    fn uniforms(&self, index: u64, n: usize, design: Design) -> [f64; 2] {
        let mut r = rng::stream(self.seed(), &[tag::OFFSET, index]);
        let k = strata_side(n) as u64;
        match design {
            Design::Stratified if index < k * k => {
                let (i, j) = (index % k, index / k);
                [(i as f64 + r.gen::<f64>()) / k as f64, (j as f64 + r.gen::<f64>()) / k as f64]
            }
            _ => [r.gen::<f64>(), r.gen::<f64>()],
        }
    }
}

fn strata_side(n: usize) -> usize {
    let k = (n as f64).sqrt().floor() as usize;
    let k = if (k + 1) * (k + 1) <= n { k + 1 } else { k };
    k & !1
}

/// Mean and 95% half-width for values produced under `design`.
pub fn design_mean_ci95(values: &[f64], design: Design) -> (f64, f64) {
    let n = values.len();
    let k = strata_side(n);
    if design == Design::Iid || k == 0 {
        return mean_ci95(values);
    }
    let mean = pairwise_sum(values) / n as f64;
    let strata = k * k;
    let pairs: Vec<f64> = values[..strata].chunks_exact(2).map(|p| (p[0] - p[1]) * (p[0] - p[1])).collect();
    let rest = &values[strata..];
    let rest_var = match rest.len() {
        0 => 0.0,
        1 => {
            let all: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            pairwise_sum(&all) / (n as f64 - 1.0)
        }
        m => {
            let rm = pairwise_sum(rest) / m as f64;
            let sq: Vec<f64> = rest.iter().map(|v| (v - rm) * (v - rm)).collect();
            pairwise_sum(&sq) / (m as f64 - 1.0) * m as f64
        }
    };
    let var = (pairwise_sum(&pairs) + rest_var) / (n as f64 * n as f64);
    (mean, 1.959963984540054 * var.sqrt())
}

fn sample_lattice(p: &FamilyParams, index: u64, u: [f64; 2]) -> CurveRep {
    let k = p.cells as i64;
    let a = Complex64::new(p.a_center, 0.0);
    let mut coeffs = Vec::with_capacity((2 * p.cells + 1).pow(2));
    for n in -k..=k {
        for m in -k..=k {
            let mut r = rng::stream(p.seed, &[tag::COEFFICIENT, index, m as u64, n as u64]);
            coeffs.push(rng::uniform_in_disk(&mut r, a, 1.0));
        }
    }
    let w = Complex64::new(u[0], u[1]) * p.period;
    CurveRep::LatticeSum(LatticeSum::new(p.period, w, a, p.cells, coeffs).expect("validated family"))
}

/// Draw `index` of `sampler` under `design` for a run of `n` samples.
pub fn sample_curve(sampler: &MeasureSampler, index: u64, n: usize, design: Design) -> CurveRep {
    sampler.sample_with_uniforms(index, sampler.uniforms(index, n, design))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub observable: String,
    pub n: usize,
    pub mean: f64,
    pub ci: f64,
    pub seed: u64,
}

/// Observable values on draws `0..n`, in index order.
pub fn observe<F>(sampler: &MeasureSampler, observable: F, n: usize, design: Design) -> Result<Vec<f64>>
where
    F: Fn(&CurveRep) -> f64 + Sync,
{
    let values: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| observable(&sample_curve(sampler, i, n, design)))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObservable { index: i as u64 });
    }
    Ok(values)
}

/// Monte Carlo mean with a 95% normal-approximation interval.
pub fn expectation<F>(
    sampler: &MeasureSampler,
    name: &str,
    observable: F,
    n: usize,
    design: Design,
) -> Result<ExpectationReport>
where
    F: Fn(&CurveRep) -> f64 + Sync,
{
    if n < 2 {
        return Err(Error::InvalidParameter(format!("expectation needs at least 2 samples, got {n}")));
    }
    let values = observe(sampler, observable, n, design)?;
    let (mean, ci) = design_mean_ci95(&values, design);
    Ok(ExpectationReport { observable: name.to_string(), n, mean, ci, seed: sampler.seed() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub shift: [f64; 2],
    pub n: usize,
    pub base: (f64, f64),
    pub shifted: (f64, f64),
    /// Mean and interval of the paired differences.
    pub difference: (f64, f64),
    pub gap: f64,
    pub pass: bool,
}

/// Compares `E[obs]` with `E[obs ∘ T^a]` on the same draws; passes when the
/// two confidence intervals overlap.
pub fn invariance_test<F>(sampler: &MeasureSampler, observable: F, shift: Complex64, n: usize) -> Result<InvarianceReport>
where
    F: Fn(&CurveRep) -> f64 + Sync,
{
    if n < 100 {
        return Err(Error::InvalidParameter(format!("invariance test needs at least 100 samples, got {n}")));
    }
    let pairs: Vec<(f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let f = sampler.sample(i);
            (observable(&f), observable(&translate(&f, shift)))
        })
        .collect();
    if let Some(i) = pairs.iter().position(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::NonFiniteObservable { index: i as u64 });
    }
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let d: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
    let base = mean_ci95(&a);
    let shifted = mean_ci95(&b);
    let gap = (shifted.0 - base.0).abs();
    Ok(InvarianceReport {
        shift: [shift.re, shift.im],
        n,
        base,
        shifted,
        difference: mean_ci95(&d),
        gap,
        pass: gap <= base.1 + shifted.1,
    })
}

/// `λ = √(c/(2(N+1)ρ̂(g)))`, with `ρ̂` the square-average density at `side`.
pub fn design_rescaling(g: &CurveRep, target: f64, side: f64, search: &DensitySearch) -> Result<f64> {
    let rho = energy_density(g, side, search)?.value;
    rescaling_for_density(g.dim(), rho, target)
}

/// The rescaling factor for a known density estimate.
pub fn rescaling_for_density(dim: usize, rho: f64, target: f64) -> Result<f64> {
    let top = 2.0 * (dim as f64 + 1.0) * rho;
    if !(target > 0.0) || !(target <= top * (1.0 + 1e-12)) {
        return Err(Error::TargetUnreachable(format!(
            "target {target} outside (0, 2(N+1)ρ] = (0, {top}]"
        )));
    }
    Ok((target / top).sqrt().min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicConfig {
    pub radii: Vec<f64>,
    pub n: usize,
    pub design: Design,
    /// Initial cells per side of the adaptive cubature for `T(R)`.
    pub resolution: usize,
    /// Relative tolerance of each `T(R)` evaluation.
    pub rel_tol: f64,
    /// Known `E[ψ]`; estimated from `target_samples` draws when absent.
    pub target: Option<f64>,
    pub target_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicRow {
    pub radius: f64,
    /// Mean and interval of `(4(N+1)/πR²)·T(R, f)`.
    pub mean: f64,
    pub ci: f64,
    /// `|mean − E[ψ]|`.
    pub gap: f64,
    /// `gap` plus both interval half-widths: a 95%-level bound on the gap of
    /// the exact expectations.
    pub gap_bound: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicReport {
    pub target: f64,
    pub target_ci: f64,
    pub rows: Vec<ErgodicRow>,
    pub monotone: bool,
    pub final_relative_gap: f64,
}

/// Normalised characteristic `(4(N+1)/πR²)·T(R, f)` averaged over draws,
/// against `E[ψ]`, for an increasing ladder of radii.
pub fn ergodic_average_check(sampler: &MeasureSampler, cfg: &ErgodicConfig) -> Result<ErgodicReport> {
    if cfg.radii.is_empty() || cfg.radii.windows(2).any(|w| w[1] <= w[0]) || cfg.radii[0] < 4.0 {
        return Err(Error::InvalidParameter("radius ladder must be increasing and start at 4 or more".into()));
    }
    if cfg.n < 2 {
        return Err(Error::InvalidParameter("ergodic check needs at least 2 samples".into()));
    }
    let (target, target_ci) = match cfg.target {
        Some(t) => (t, 0.0),
        None => {
            let r = expectation(sampler, "psi", psi, cfg.target_samples.max(2), cfg.design)?;
            (r.mean, r.ci)
        }
    };
    let k = 4.0 * (sampler.dim() as f64 + 1.0) / std::f64::consts::PI;
    let per_sample: Vec<Result<Vec<f64>>> = (0..cfg.n as u64)
        .into_par_iter()
        .map(|i| {
            let f = sample_curve(sampler, i, cfg.n, cfg.design);
            cfg.radii
                .iter()
                .map(|&r| nsa_characteristic_with(&f, r, cfg.resolution, cfg.rel_tol).map(|t| k * t.value / (r * r)))
                .collect()
        })
        .collect();
    let mut table = Vec::with_capacity(cfg.n);
    for (i, row) in per_sample.into_iter().enumerate() {
        let row = row?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObservable { index: i as u64 });
        }
        table.push(row);
    }
    let scale = if target != 0.0 { target.abs() } else { 1.0 };
    let rows: Vec<ErgodicRow> = cfg
        .radii
        .iter()
        .enumerate()
        .map(|(j, &radius)| {
            let col: Vec<f64> = table.iter().map(|r| r[j]).collect();
            let (mean, ci) = design_mean_ci95(&col, cfg.design);
            let gap = (mean - target).abs();
            ErgodicRow { radius, mean, ci, gap, gap_bound: gap + ci + target_ci, relative_gap: gap / scale }
        })
        .collect();
    let monotone = rows.windows(2).all(|w| w[1].gap_bound <= w[0].gap_bound);
    let final_relative_gap = rows.last().map(|r| r.relative_gap).unwrap_or(f64::NAN);
    Ok(ErgodicReport { target, target_ci, rows, monotone, final_relative_gap })
}
