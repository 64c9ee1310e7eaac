//! Alternating minimisation of the rate-distortion Lagrangian on finite
//! alphabets, with a grid-search oracle.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mutual_information, DistortionMatrix, JointPmf, Pmf};
use crate::error::{Error, Result};
use crate::numeric::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaConfig {
    /// Convergence threshold: the certified Lagrangian gap in nats for finite
    /// alphabets, the relative Lagrangian change for grid sources.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BaConfig {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 10_000 }
    }
}

/// A point on the rate-distortion curve with its convergence record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaPoint {
    pub slope: f64,
    pub distortion: f64,
    pub rate: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Reproduction marginal at the last iterate.
    pub output: Vec<f64>,
}

fn check_shapes(source: &Pmf, d: &DistortionMatrix) -> Result<()> {
    if d.shape().0 != source.len() {
        return Err(Error::DimensionMismatch { expected: source.len(), found: d.shape().0 });
    }
    Ok(())
}

pub fn blahut_arimoto(source: &Pmf, d: &DistortionMatrix, slope: f64) -> Result<BaPoint> {
    blahut_arimoto_with(source, d, slope, &BaConfig::default(), None)
}

/// Blahut–Arimoto at Lagrange slope `s` (nats per unit distortion), started
/// from an even mixture of `init` and the uniform reproduction law. Stops
/// once `ln max_y c_y`, which bounds the distance to the optimal Lagrangian,
/// falls below the tolerance.
pub fn blahut_arimoto_with(
    source: &Pmf,
    d: &DistortionMatrix,
    slope: f64,
    cfg: &BaConfig,
    init: Option<&[f64]>,
) -> Result<BaPoint> {
    check_shapes(source, d)?;
    if !(slope >= 0.0) || !slope.is_finite() {
        return Err(Error::InvalidParameter(format!("slope must be finite and nonnegative, got {slope}")));
    }
    let (nx, ny) = d.shape();
    let p = source.probs();
    // Row-shifted kernel exp(−s(d − min_y d)) keeps every row's peak at 1.
    let shift: Vec<f64> = (0..nx).map(|x| (0..ny).map(|y| d.get(x, y)).fold(f64::INFINITY, f64::min)).collect();
    let kernel: Vec<f64> = (0..nx * ny).map(|k| (-slope * (d.get(k / ny, k % ny) - shift[k / ny])).exp()).collect();
    let uniform = 1.0 / ny as f64;
    let mut q: Vec<f64> = match init {
        Some(v) if v.len() == ny => v.iter().map(|w| 0.5 * (w + uniform)).collect(),
        _ => vec![uniform; ny],
    };
    let mut z = vec![0.0; nx];
    let normalizers = |q: &[f64], z: &mut [f64]| {
        for x in 0..nx {
            z[x] = (0..ny).map(|y| q[y] * kernel[x * ny + y]).sum();
        }
    };
    normalizers(&q, &mut z);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let mut next = vec![0.0; ny];
        for x in 0..nx {
            if p[x] > 0.0 {
                let w = p[x] / z[x];
                for y in 0..ny {
                    next[y] += w * kernel[x * ny + y];
                }
            }
        }
        let gap = next.iter().fold(f64::NEG_INFINITY, |a, &c| a.max(c)).ln();
        for y in 0..ny {
            next[y] *= q[y];
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        q = next;
        normalizers(&q, &mut z);
        if gap <= cfg.tolerance {
            converged = true;
            break;
        }
    }
    let channel: Vec<f64> = (0..nx * ny)
        .map(|k| {
            let x = k / ny;
            if p[x] > 0.0 {
                q[k % ny] * kernel[k] / z[x]
            } else {
                1.0 / ny as f64
            }
        })
        .collect();
    let (distortion, rate) = evaluate_channel(source, d, &channel)?;
    Ok(BaPoint { slope, distortion, rate, iterations, converged, output: q })
}

/// Expected distortion and mutual information of a row-major channel.
fn evaluate_channel(source: &Pmf, d: &DistortionMatrix, channel: &[f64]) -> Result<(f64, f64)> {
    let (nx, ny) = d.shape();
    let p = source.probs();
    let mut distortion = 0.0;
    let mut joint = Vec::with_capacity(nx * ny);
    for x in 0..nx {
        for y in 0..ny {
            let w = p[x] * channel[x * ny + y];
            distortion += w * d.get(x, y);
            joint.push(w);
        }
    }
    let total: f64 = joint.iter().sum();
    joint.iter_mut().for_each(|v| *v /= total);
    Ok((distortion, mutual_information(&JointPmf::new(nx, ny, joint)?)))
}

fn minimum_distortion(source: &Pmf, d: &DistortionMatrix) -> f64 {
    let (nx, ny) = d.shape();
    (0..nx).map(|x| source.probs()[x] * (0..ny).map(|y| d.get(x, y)).fold(f64::INFINITY, f64::min)).sum()
}

/// Best distortion with a constant reproduction, and its symbol.
fn zero_rate_distortion(source: &Pmf, d: &DistortionMatrix) -> (f64, usize) {
    let (nx, ny) = d.shape();
    (0..ny)
        .map(|y| ((0..nx).map(|x| source.probs()[x] * d.get(x, y)).sum::<f64>(), y))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

/// The rate at distortion `target`, found by bisection on the slope in log
/// scale; the returned point satisfies `distortion ≤ target`.
pub fn rate_at_distortion(source: &Pmf, d: &DistortionMatrix, target: f64, cfg: &BaConfig) -> Result<BaPoint> {
    check_shapes(source, d)?;
    let minimum = minimum_distortion(source, d);
    if !(target >= minimum - 1e-15) {
        return Err(Error::Infeasible { target, minimum });
    }
    let (dmax, best) = zero_rate_distortion(source, d);
    if target >= dmax {
        let ny = d.shape().1;
        let mut output = vec![0.0; ny];
        output[best] = 1.0;
        return Ok(BaPoint { slope: 0.0, distortion: dmax, rate: 0.0, iterations: 0, converged: true, output });
    }
    let mut hi = 1.0;
    let mut hi_point = blahut_arimoto_with(source, d, hi, cfg, None)?;
    let mut lo = 0.0;
    while hi_point.distortion > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            break;
        }
        hi_point = blahut_arimoto_with(source, d, hi, cfg, Some(&hi_point.output))?;
    }
    let mut warm = hi_point.output.clone();
    for _ in 0..100 {
        if (hi_point.distortion - target).abs() <= 1e-12 * target.max(1e-300) || hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        let point = blahut_arimoto_with(source, d, mid, cfg, Some(&warm))?;
        warm = point.output.clone();
        if point.distortion > target {
            lo = mid;
        } else {
            hi = mid;
            hi_point = point;
        }
    }
    Ok(hi_point)
}

/// Minimum mutual information over a refining grid of test channels
/// meeting `E d ≤ target`; `resolution` is the final grid step.
pub fn rd_brute_force(source: &Pmf, d: &DistortionMatrix, target: f64, resolution: f64) -> Result<f64> {
    check_shapes(source, d)?;
    let (nx, ny) = d.shape();
    if nx * ny > 9 {
        return Err(Error::InvalidParameter(format!("brute force is limited to 9 channel entries, got {}", nx * ny)));
    }
    if !(resolution > 0.0 && resolution < 1.0) {
        return Err(Error::InvalidParameter(format!("resolution must lie in (0, 1), got {resolution}")));
    }
    let minimum = minimum_distortion(source, d);
    if target < minimum - 1e-15 {
        return Err(Error::Infeasible { target, minimum });
    }
    if target >= zero_rate_distortion(source, d).0 {
        return Ok(0.0);
    }
    let mut step = 1.0 / 8.0;
    let mut rows: Vec<Vec<Vec<f64>>> = (0..nx).map(|_| simplex_grid(ny, step)).collect();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    loop {
        // Re-centre at this step until the box stops improving, then refine.
        loop {
            let improved = match search(source, d, &rows, target)? {
                Some((rate, channel)) if best.as_ref().is_none_or(|b| rate < b.0 - 1e-15) => {
                    best = Some((rate, channel));
                    true
                }
                _ => false,
            };
            let Some((_, centre)) = &best else {
                return Err(Error::Numeric("no feasible test channel on the search grid".into()));
            };
            if !improved {
                break;
            }
            rows = centre.iter().map(|c| simplex_box(c, step, 4)).collect();
        }
        if step <= resolution {
            break;
        }
        step *= 0.5;
        let (_, centre) = best.as_ref().expect("a feasible channel was found above");
        rows = centre.iter().map(|c| simplex_box(c, step, 4)).collect();
    }
    Ok(best.map(|b| b.0).unwrap_or(0.0))
}

/// Best channel among the row candidates. A candidate over the target is
/// mixed with the minimum-distortion channel until its distortion meets the
/// target exactly, so the search can slide along the constraint boundary.
fn search(
    source: &Pmf,
    d: &DistortionMatrix,
    rows: &[Vec<Vec<f64>>],
    target: f64,
) -> Result<Option<(f64, Vec<Vec<f64>>)>> {
    let nx = rows.len();
    let ny = d.shape().1;
    let p = source.probs();
    let nearest: Vec<usize> =
        (0..nx).map(|x| (0..ny).fold(0, |b, y| if d.get(x, y) < d.get(x, b) { y } else { b })).collect();
    let floor = minimum_distortion(source, d);
    let xlogx = |v: f64| if v > 0.0 { v * v.log2() } else { 0.0 };
    let source_term: f64 = p.iter().map(|&v| xlogx(v)).sum();
    // Per candidate row: joint entries, expected cost and Σ j log j.
    let tables: Vec<Vec<(Vec<f64>, f64, f64)>> = rows
        .iter()
        .enumerate()
        .map(|(x, cands)| {
            cands
                .iter()
                .map(|r| {
                    let joint: Vec<f64> = r.iter().map(|w| p[x] * w).collect();
                    let cost = joint.iter().enumerate().map(|(y, j)| j * d.get(x, y)).sum();
                    let ent = joint.iter().map(|&j| xlogx(j)).sum();
                    (joint, cost, ent)
                })
                .collect()
        })
        .collect();
    let mixing = |cost: f64| if cost > target { (cost - target) / (cost - floor) } else { 0.0 };
    let total: usize = rows.iter().map(Vec::len).product();
    let best = (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rest = k;
            let mut cost = 0.0;
            let mut ent = 0.0;
            let mut py = [0.0f64; 9];
            let mut picks = [0usize; 9];
            for (x, t) in tables.iter().enumerate() {
                let i = rest % t.len();
                rest /= t.len();
                picks[x] = i;
                let (joint, c, e) = &t[i];
                cost += c;
                ent += e;
                for (acc, j) in py.iter_mut().zip(joint) {
                    *acc += j;
                }
            }
            let theta = mixing(cost);
            if theta > 0.0 {
                ent = 0.0;
                py = [0.0; 9];
                for (x, t) in tables.iter().enumerate() {
                    for (y, &j) in t[picks[x]].0.iter().enumerate() {
                        let v = (1.0 - theta) * j + if y == nearest[x] { theta * p[x] } else { 0.0 };
                        ent += xlogx(v);
                        py[y] += v;
                    }
                }
            }
            let out: f64 = py[..ny].iter().map(|&v| xlogx(v)).sum();
            ((ent - source_term - out).max(0.0), k)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(best.map(|(rate, k)| {
        let mut rest = k;
        let picked: Vec<&Vec<f64>> = (0..nx)
            .map(|x| {
                let i = rest % rows[x].len();
                rest /= rows[x].len();
                &rows[x][i]
            })
            .collect();
        let cost: f64 = picked.iter().enumerate().map(|(x, r)| (0..ny).map(|y| p[x] * r[y] * d.get(x, y)).sum::<f64>()).sum();
        let theta = mixing(cost);
        let channel = picked
            .iter()
            .enumerate()
            .map(|(x, r)| {
                (0..ny).map(|y| (1.0 - theta) * r[y] + if y == nearest[x] { theta } else { 0.0 }).collect()
            })
            .collect();
        (rate, channel)
    }))
}

/// All points of the simplex in `ℝⁿ` with coordinates on the `step` grid.
fn simplex_grid(n: usize, step: f64) -> Vec<Vec<f64>> {
    let m = (1.0 / step).round() as usize;
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, m: usize, out: &mut Vec<Vec<f64>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.iter().map(|&c| c as f64 / m as f64).collect());
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, cur, m, out);
        }
    }
    rec(0, m, &mut cur, m, &mut out);
    out
}

/// Simplex points `centre + step·k` with `|kᵢ| ≤ half` on the first `n−1`
/// coordinates.
fn simplex_box(centre: &[f64], step: f64, half: i64) -> Vec<Vec<f64>> {
    let n = centre.len();
    let side = (2 * half + 1) as usize;
    let count = side.pow(n as u32 - 1);
    let mut out = Vec::with_capacity(count);
    for mut k in 0..count {
        let mut v = Vec::with_capacity(n);
        for c in &centre[..n - 1] {
            let off = (k % side) as i64 - half;
            k /= side;
            v.push(c + off as f64 * step);
        }
        let last = 1.0 - v.iter().sum::<f64>();
        v.push(last);
        if v.iter().all(|&c| c >= -1e-15) {
            out.push(v.into_iter().map(|c| c.max(0.0)).collect());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdEstimate {
    /// `(distortion, rate in bits)`, in ladder order.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub fit_residual: f64,
    pub converged: bool,
}

impl RdEstimate {
    pub fn from_points(points: Vec<(f64, f64)>, converged: bool) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidParameter(format!("slope fit needs at least 3 points, got {}", points.len())));
        }
        let xs: Vec<f64> = points.iter().map(|p| (1.0 / p.0).log2()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        let (slope, intercept, fit_residual) =
            linear_fit(&xs, &ys).ok_or_else(|| Error::Numeric("degenerate distortion ladder".into()))?;
        Ok(Self { points, slope, intercept, fit_residual, converged })
    }

    /// Rates nonincreasing in distortion and the point set convex.
    pub fn is_monotone_convex(&self) -> bool {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let monotone = pts.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
        let convex = pts.windows(3).all(|w| {
            let t = (w[1].0 - w[0].0) / (w[2].0 - w[0].0);
            w[1].1 <= (1.0 - t) * w[0].1 + t * w[2].1 + 1e-9
        });
        monotone && convex
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["distortion", "rate_bits"])?;
        for (d, r) in &self.points {
            w.write_record([format!("{d:.17e}"), format!("{r:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON summary of the fit.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "intercept": self.intercept,
            "fit_residual": self.fit_residual,
            "points": self.points.len(),
            "converged": self.converged,
        })
    }
}

pub(crate) fn validate_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.len() < 3 {
        return Err(Error::InvalidParameter(format!("distortion ladder needs at least 3 levels, got {}", ladder.len())));
    }
    if ladder.iter().any(|&e| !(e > 0.0)) || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("distortion ladder must be positive and strictly decreasing".into()));
    }
    Ok(())
}


/// Rate-distortion points along a decreasing distortion ladder.
pub fn rd_curve(source: &Pmf, d: &DistortionMatrix, ladder: &[f64], cfg: &BaConfig) -> Result<RdEstimate> {
    validate_ladder(ladder)?;
    let points: Vec<BaPoint> =
        ladder.par_iter().map(|&e| rate_at_distortion(source, d, e, cfg)).collect::<Result<Vec<_>>>()?;
    let converged = points.iter().all(|p| p.converged);
    RdEstimate::from_points(ladder.iter().zip(&points).map(|(&e, p)| (e, p.rate)).collect(), converged)
}

/// Least-squares slope of rate against `log₂(1/ε)`.
pub fn rdim_slope(est: &RdEstimate) -> Result<f64> {
    Ok(RdEstimate::from_points(est.points.clone(), est.converged)?.slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::information::entropy;
    use rand::{Rng, SeedableRng};

    fn binary() -> (Pmf, DistortionMatrix) {
        (Pmf::uniform(2).unwrap(), DistortionMatrix::hamming(2).unwrap())
    }

    fn h2(p: f64) -> f64 {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }

    #[test]
    fn zero_slope_has_zero_rate() {
        let (p, d) = binary();
        let r = blahut_arimoto(&p, &d, 0.0).unwrap();
        assert!(r.converged && r.rate.abs() < 1e-15);
    }

    #[test]
    fn lossless_limit_recovers_entropy() {
        let p = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let d = DistortionMatrix::hamming(3).unwrap();
        let r = blahut_arimoto(&p, &d, 60.0).unwrap();
        assert!(r.distortion < 1e-20);
        assert!((r.rate - entropy(&p)).abs() < 1e-9);
        let r = rate_at_distortion(&p, &d, 0.0, &BaConfig::default()).unwrap();
        assert!((r.rate - entropy(&p)).abs() < 1e-9);
    }

    #[test]
    fn binary_hamming_curve() {
        let (p, d) = binary();
        let r = rate_at_distortion(&p, &d, 0.11, &BaConfig::default()).unwrap();
        assert!((r.distortion - 0.11).abs() < 1e-10);
        assert!((r.rate - (1.0 - h2(0.11))).abs() < 1e-8);
        assert!((r.rate - 0.5).abs() < 0.001);
        let b = rd_brute_force(&p, &d, 0.11, 1e-3).unwrap();
        assert!(b >= r.rate - 1e-9 && b - r.rate < 1e-3, "{b} {}", r.rate);
    }

    #[test]
    fn brute_force_edges() {
        let (p, d) = binary();
        assert_eq!(rd_brute_force(&p, &d, 0.6, 1e-2).unwrap(), 0.0);
        assert!((rd_brute_force(&p, &d, 0.0, 1e-2).unwrap() - 1.0).abs() < 1e-12);
        let d = DistortionMatrix::from_rows(&[vec![0.5, 1.0], vec![1.0, 0.5]]).unwrap();
        assert!(matches!(rd_brute_force(&p, &d, 0.2, 1e-2), Err(Error::Infeasible { .. })));
        assert!(matches!(rate_at_distortion(&p, &d, 0.2, &BaConfig::default()), Err(Error::Infeasible { .. })));
        let big = DistortionMatrix::hamming(4).unwrap();
        assert!(rd_brute_force(&Pmf::uniform(4).unwrap(), &big, 0.1, 1e-2).is_err());
    }

    #[test]
    fn brute_force_agrees_with_alternating_minimisation() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for trial in 0..8 {
            let n = 2 + trial % 2;
            let p = Pmf::normalized((0..n).map(|_| r.gen_range(0.1..1.0)).collect()).unwrap();
            let d = DistortionMatrix::new(n, n, (0..n * n).map(|k| if k / n == k % n { 0.0 } else { r.gen_range(0.2..1.0) }).collect()).unwrap();
            let (dmax, _) = zero_rate_distortion(&p, &d);
            let target = r.gen_range(0.2..0.8) * dmax;
            let ba = rate_at_distortion(&p, &d, target, &BaConfig::default()).unwrap();
            let bf = rd_brute_force(&p, &d, target, 1e-4).unwrap();
            assert!(bf >= ba.rate - 1e-6 && bf - ba.rate < 1e-3, "trial {trial}: {} vs {bf}", ba.rate);
        }
    }

    #[test]
    fn slope_fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (1..6).map(|k| {
            let e = 2f64.powi(-k);
            (e, 2.0 * (1.0 / e).log2() + 1.0)
        }).collect();
        let est = RdEstimate::from_points(pts.clone(), true).unwrap();
        assert!((rdim_slope(&est).unwrap() - 2.0).abs() < 1e-12);
        assert!((est.intercept - 1.0).abs() < 1e-12);
        assert!(RdEstimate::from_points(pts[..2].to_vec(), true).is_err());
    }

    #[test]
    fn small_quantised_interval_agrees_with_brute_force() {
        let xs = [1.0 / 6.0, 0.5, 5.0 / 6.0];
        let p = Pmf::uniform(3).unwrap();
        let d = DistortionMatrix::absolute(&xs, &xs).unwrap();
        for target in [0.05, 0.1, 0.15] {
            let ba = rate_at_distortion(&p, &d, target, &BaConfig::default()).unwrap();
            let bf = rd_brute_force(&p, &d, target, 1e-4).unwrap();
            assert!(bf >= ba.rate - 1e-6 && bf - ba.rate < 1e-3, "{target}: {} vs {bf}", ba.rate);
        }
    }

    #[test]
    fn csv_and_summary() {
        let est = RdEstimate::from_points(vec![(0.5, 0.1), (0.25, 0.9), (0.125, 1.8)], true).unwrap();
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("distortion,rate_bits\n"));
        assert!(est.summary()["slope"].as_f64().is_some());
    }
}
