//! Certification of the Brody bound `|df| ≤ 1` and of nondegeneracy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::energy::GridField;
use super::{local_lipschitz, CurveRep, LatticeSum, Square};
use crate::projective::FS_SCALE;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// Worst of two verdicts, `Fail` dominating `Inconclusive`.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrodyConfig {
    pub resolution: usize,
    pub margin: f64,
    /// Number of resolution doublings allowed before giving up.
    pub max_refinements: usize,
    /// Extra border scanned around the carrier of curves with no
    /// structural certificate.
    pub halo: f64,
}

impl Default for BrodyConfig {
    fn default() -> Self {
        Self { resolution: 32, margin: 1e-6, max_refinements: 5, halo: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrodyCertificate {
    pub verdict: Verdict,
    /// Largest `|df|` found (grid scan plus local polishing).
    pub max_df: f64,
    /// Change of the maximum under the last refinement, plus any analytic
    /// perturbation allowance.
    pub uncertainty: f64,
    pub argmax: [f64; 2],
    pub resolution: usize,
    pub method: String,
}

impl BrodyCertificate {
    fn decide(&mut self, margin: f64, converged: bool) {
        self.verdict = if self.max_df > 1.0 + margin {
            Verdict::Fail
        } else if !converged {
            Verdict::Inconclusive
        } else if self.max_df + self.uncertainty <= 1.0 + margin {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        };
    }
}

/// Grid scan of `|df|` over `region`, refined by doubling the resolution
/// until the maximum moves by less than `margin/10`. Each level polishes
/// the best grid points by compass search.
pub fn brody_verify(curve: &CurveRep, region: Square, resolution: usize, margin: f64) -> Result<BrodyCertificate> {
    brody_verify_with(curve, region, resolution, margin, BrodyConfig::default().max_refinements)
}

fn brody_verify_with(
    curve: &CurveRep,
    region: Square,
    resolution: usize,
    margin: f64,
    max_refinements: usize,
) -> Result<BrodyCertificate> {
    let region = Square::new(region.corner, region.side)?;
    let mut res = resolution.max(2);
    let mut prev: Option<f64> = None;
    let mut cert = BrodyCertificate {
        verdict: Verdict::Inconclusive,
        max_df: 0.0,
        uncertainty: f64::INFINITY,
        argmax: [region.center().re, region.center().im],
        resolution: res,
        method: "grid".into(),
    };
    for _ in 0..=max_refinements {
        let grid = GridField::sample_with(region, res, |z| local_lipschitz(curve, z))?;
        let (best, at) = polish_top(curve, &grid, &region);
        cert.max_df = best;
        cert.argmax = [at.re, at.im];
        cert.resolution = res;
        if let Some(p) = prev {
            cert.uncertainty = (best - p).abs();
            if cert.uncertainty < margin / 10.0 {
                cert.decide(margin, true);
                return Ok(cert);
            }
        }
        prev = Some(best);
        res *= 2;
    }
    cert.decide(margin, false);
    Ok(cert)
}

fn polish_top(curve: &CurveRep, grid: &GridField, region: &Square) -> (f64, Complex64) {
    const TOP: usize = 8;
    let mut order: Vec<usize> = (0..grid.values.len()).collect();
    order.sort_by(|&a, &b| grid.values[b].total_cmp(&grid.values[a]).then(a.cmp(&b)));
    let h = grid.spacing();
    let mut best = (grid.values[order[0]], grid.point(order[0] % grid.resolution, order[0] / grid.resolution));
    for &k in order.iter().take(TOP) {
        let (v, z) = polish_max(curve, grid.point(k % grid.resolution, k / grid.resolution), h, region);
        if v > best.0 {
            best = (v, z);
        }
    }
    best
}

/// Nelder–Mead ascent from `start` with initial simplex size `step0`,
/// confined to `region`.
fn polish_max(curve: &CurveRep, start: Complex64, step0: f64, region: &Square) -> (f64, Complex64) {
    let value = |z: Complex64| if region.contains(z) { local_lipschitz(curve, z) } else { f64::NEG_INFINITY };
    let mut simplex = [start, start + Complex64::new(step0, 0.0), start + Complex64::new(0.0, step0)];
    let mut vals = simplex.map(value);
    let mut budget = 600;
    while budget > 0 {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        simplex = idx.map(|i| simplex[i]);
        vals = idx.map(|i| vals[i]);
        let size = (simplex[1] - simplex[0]).norm().max((simplex[2] - simplex[0]).norm());
        if size < 1e-9 * step0 || (vals[0] - vals[2]).abs() < 1e-15 {
            break;
        }
        let centroid = 0.5 * (simplex[0] + simplex[1]);
        let reflected = centroid + (centroid - simplex[2]);
        let vr = value(reflected);
        budget -= 1;
        if vr > vals[0] {
            let expanded = centroid + 2.0 * (centroid - simplex[2]);
            let ve = value(expanded);
            budget -= 1;
            if ve > vr {
                simplex[2] = expanded;
                vals[2] = ve;
            } else {
                simplex[2] = reflected;
                vals[2] = vr;
            }
        } else if vr > vals[1] {
            simplex[2] = reflected;
            vals[2] = vr;
        } else {
            let contracted = centroid + 0.5 * (simplex[2] - centroid);
            let vc = value(contracted);
            budget -= 1;
            if vc > vals[2] {
                simplex[2] = contracted;
                vals[2] = vc;
            } else {
                for k in 1..3 {
                    simplex[k] = simplex[0] + 0.5 * (simplex[k] - simplex[0]);
                    vals[k] = value(simplex[k]);
                }
                budget -= 2;
            }
        }
    }
    let best = (0..3).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (vals[best], simplex[best])
}

/// Certificate for a whole curve, using the structure of its
/// representation where possible.
///
/// Lattice sums are certified on a square around every window pole and
/// one periodic background pole, with an analytic bound on `|f′|` elsewhere
/// and a perturbation allowance for background poles near the window. Other
/// curves are scanned on their carrier plus `halo`.
pub fn certify_brody(curve: &CurveRep, cfg: &BrodyConfig) -> Result<BrodyCertificate> {
    match curve {
        CurveRep::Constant(_) => Ok(BrodyCertificate {
            verdict: Verdict::Pass,
            max_df: 0.0,
            uncertainty: 0.0,
            argmax: [0.0, 0.0],
            resolution: 0,
            method: "constant".into(),
        }),
        CurveRep::Translated { inner, shift } => {
            let mut c = certify_brody(inner, cfg)?;
            c.argmax = [c.argmax[0] - shift.re, c.argmax[1] - shift.im];
            Ok(c)
        }
        CurveRep::Rescaled { inner, factor } => {
            let mut c = certify_brody(inner, cfg)?;
            let converged = c.verdict != Verdict::Inconclusive;
            c.max_df *= factor;
            c.uncertainty *= factor;
            c.argmax = [c.argmax[0] / factor, c.argmax[1] / factor];
            c.decide(cfg.margin, converged);
            Ok(c)
        }
        CurveRep::LatticeSum(l) => certify_lattice(curve, l, cfg),
        CurveRep::Rational(_) | CurveRep::Glued(_) => {
            let carrier = curve.carrier();
            let region = Square::new(
                carrier.corner - Complex64::new(cfg.halo, cfg.halo),
                carrier.side + 2.0 * cfg.halo,
            )?;
            let per_unit = (cfg.resolution as f64 / 4.0).max(1.0);
            let res = ((region.side * per_unit).ceil() as usize).clamp(cfg.resolution, 4096);
            brody_verify_with(curve, region, res, cfg.margin, cfg.max_refinements)
        }
    }
}

/// `Σ_{μ ∈ ℤ[i]∖0} |μ|⁻⁴`.
const GAUSSIAN_LATTICE_ZETA4: f64 = 6.026_813_609_603_948;

fn certify_lattice(curve: &CurveRep, l: &LatticeSum, cfg: &BrodyConfig) -> Result<BrodyCertificate> {
    let period = l.period();
    let c_max = l.max_coefficient();
    let r_pole = 3f64.max(2.5 * c_max.cbrt());
    if 2.0 * std::f64::consts::SQRT_2 * r_pole >= period {
        // Pole squares overlap: scan the whole window.
        let carrier = curve.carrier();
        let region = Square::new(carrier.corner - Complex64::new(period, period), carrier.side + 2.0 * period)?;
        let res = ((region.side / r_pole * cfg.resolution as f64).ceil() as usize).clamp(cfg.resolution, 8192);
        return brody_verify_with(curve, region, res, cfg.margin, cfg.max_refinements);
    }
    let mut cert = BrodyCertificate {
        verdict: Verdict::Pass,
        max_df: 0.0,
        uncertainty: 0.0,
        argmax: [0.0, 0.0],
        resolution: cfg.resolution,
        method: "pole-squares".into(),
    };
    let mut verdict = Verdict::Pass;
    let absorb = |cert: &mut BrodyCertificate, verdict: &mut Verdict, sub: &BrodyCertificate, extra: f64| {
        let value = sub.max_df + extra;
        if value > cert.max_df {
            cert.max_df = value;
            cert.argmax = sub.argmax;
        }
        cert.uncertainty = cert.uncertainty.max(sub.uncertainty + extra);
        cert.resolution = cert.resolution.max(sub.resolution);
        *verdict = verdict.and(sub.verdict);
    };
    for (pole, coeff) in l.window_poles() {
        if coeff.norm() == 0.0 {
            continue;
        }
        let sq = Square::centered(pole, r_pole)?;
        let sub = brody_verify_with(curve, sq, cfg.resolution, cfg.margin, cfg.max_refinements)?;
        absorb(&mut cert, &mut verdict, &sub, 0.0);
    }
    let background = l.background();
    if background.norm() > 0.0 {
        let rep = CurveRep::LatticeSum(LatticeSum::periodic(period, background)?);
        let sq = Square::centered(Complex64::new(0.0, 0.0), r_pole)?;
        let mut sub = brody_verify_with(&rep, sq, cfg.resolution, cfg.margin, cfg.max_refinements)?;
        // Background poles see the window's deviation from the background
        // only through a far-field perturbation (e, e′) of (f, f′), which
        // changes |df| by at most (|df| + |e′|/√π)(1 + 2|e|) − |df|.
        let deviation: f64 = l.window().iter().map(|u| (u - background).norm()).sum();
        let dist = period - std::f64::consts::SQRT_2 * r_pole;
        let e = deviation / dist.powi(3);
        let de = 3.0 * deviation / dist.powi(4);
        let bound = (sub.max_df + de * FS_SCALE) * (1.0 + 2.0 * e);
        sub.argmax = [sub.argmax[0] + period, sub.argmax[1]];
        absorb(&mut cert, &mut verdict, &sub, bound - sub.max_df);
    }
    // Off the pole squares the nearest pole is at least r_pole away and the
    // others at least half their lattice distance.
    let off = 3.0 * FS_SCALE * c_max * (r_pole.powi(-4) + 16.0 * GAUSSIAN_LATTICE_ZETA4 / period.powi(4));
    cert.max_df = cert.max_df.max(off);
    cert.decide(cfg.margin, verdict != Verdict::Inconclusive);
    if verdict == Verdict::Fail {
        cert.verdict = Verdict::Fail;
    }
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub nondegenerate: bool,
    pub witness: Option<[f64; 2]>,
    pub centers_checked: usize,
}

/// Checks that every disk `D_R(a)` with centre on the region's grid holds
/// a sample with `|df| ≥ 1/R`. Certified only on the scanned region.
pub fn nondegeneracy_check(
    curve: &CurveRep,
    radius: f64,
    region: Square,
    resolution: usize,
) -> Result<NondegeneracyReport> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(crate::Error::InvalidParameter(format!("nondegeneracy radius must be positive, got {radius}")));
    }
    let region = Square::new(region.corner, region.side)?;
    let h = region.side / resolution.max(2) as f64;
    let pad = (radius / h).ceil() as usize;
    let n = resolution.max(2) + 2 * pad;
    let wide = Square::new(region.corner - Complex64::new(pad as f64 * h, pad as f64 * h), n as f64 * h)?;
    let grid = GridField::sample_with(wide, n, |z| local_lipschitz(curve, z))?;
    let threshold = 1.0 / radius;
    // Bucket the strong samples by cells of side R.
    let bucket = |z: Complex64| (((z.re - wide.corner.re) / radius).floor() as i64, ((z.im - wide.corner.im) / radius).floor() as i64);
    let mut strong: std::collections::HashMap<(i64, i64), Vec<Complex64>> = std::collections::HashMap::new();
    for j in 0..n {
        for i in 0..n {
            if grid.get(i, j) >= threshold {
                let z = grid.point(i, j);
                strong.entry(bucket(z)).or_default().push(z);
            }
        }
    }
    let mut checked = 0;
    for j in pad..pad + resolution.max(2) {
        for i in pad..pad + resolution.max(2) {
            let a = grid.point(i, j);
            checked += 1;
            let (bi, bj) = bucket(a);
            let mut found = false;
            'search: for dj in -1..=1 {
                for di in -1..=1 {
                    if let Some(pts) = strong.get(&(bi + di, bj + dj)) {
                        if pts.iter().any(|p| (p - a).norm() <= radius) {
                            found = true;
                            break 'search;
                        }
                    }
                }
            }
            if !found {
                return Ok(NondegeneracyReport { nondegenerate: false, witness: Some([a.re, a.im]), centers_checked: checked });
            }
        }
    }
    Ok(NondegeneracyReport { nondegenerate: true, witness: None, centers_checked: checked })
}
