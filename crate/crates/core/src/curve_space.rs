//! Dynamical metrics on curve space, covering numbers and tame-growth
//! diagnostics.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{local_lipschitz, translate, CurveRep, Square};
use crate::error::{Error, Result};
use crate::measures::MeasureSampler;
use crate::numeric::pairwise_sum;
use crate::projective::fs_distance_raw;

/// A finite list of curves into the same `CP^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEnsemble {
    curves: Vec<CurveRep>,
    provenance: String,
}

impl CurveEnsemble {
    pub fn new(curves: Vec<CurveRep>, provenance: impl Into<String>) -> Result<Self> {
        let Some(first) = curves.first() else {
            return Err(Error::InvalidParameter("ensemble must be nonempty".into()));
        };
        let n = first.dim();
        if let Some(c) = curves.iter().find(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: c.dim() });
        }
        Ok(Self { curves, provenance: provenance.into() })
    }

    /// Draws `0..count` of `sampler`.
    pub fn from_sampler(sampler: &MeasureSampler, count: usize) -> Result<Self> {
        let curves: Vec<CurveRep> = (0..count as u64).into_par_iter().map(|i| sampler.sample(i)).collect();
        let provenance = serde_json::to_string(sampler)?;
        Self::new(curves, provenance)
    }

    pub fn curves(&self) -> &[CurveRep] {
        &self.curves
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
}

/// Which dynamical metric to evaluate. With `d(f, g)` the maximum of
/// `d_FS(f(z), g(z))` over the unit square:
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricKind {
    /// `d` itself.
    Unit,
    /// `d_L = sup_{u∈[0,L]²} d(T^u f, T^u g)`, the maximum over `[0, L+1]²`.
    Window { side: f64 },
    /// `d̄_L = L⁻² ∫_{[0,L]²} d(T^u f, T^u g) du`.
    Average { side: usize },
    /// `max_{u∈{0..L-1}²} d̄₁(T^u f, T^u g)`.
    AverageMax { side: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynMetricSpec {
    pub kind: MetricKind,
    /// Must divide 1.
    pub grid_spacing: f64,
    /// A global bound on `|df|` for both curves; `Some(1.0)` for Brody curves.
    /// Per-square analytic bounds are used when they are smaller.
    pub lipschitz: Option<f64>,
}

impl DynMetricSpec {
    pub fn new(kind: MetricKind, grid_spacing: f64) -> Result<Self> {
        let s = Self { kind, grid_spacing, lipschitz: Some(1.0) };
        s.resolution()?;
        Ok(s)
    }

    pub fn with_lipschitz(mut self, lipschitz: Option<f64>) -> Self {
        self.lipschitz = lipschitz;
        self
    }

    /// Grid points per unit length.
    pub fn resolution(&self) -> Result<usize> {
        let h = self.grid_spacing;
        if !(h > 0.0) || h > 1.0 {
            return Err(Error::InvalidParameter(format!("grid spacing must lie in (0, 1], got {h}")));
        }
        let m = (1.0 / h).round();
        if ((1.0 / h) - m).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("grid spacing {h} does not divide 1")));
        }
        match self.kind {
            MetricKind::Window { side } if !(side >= 0.0) || !side.is_finite() => {
                Err(Error::InvalidParameter(format!("window side must be nonnegative, got {side}")))
            }
            MetricKind::Average { side: 0 } | MetricKind::AverageMax { side: 0 } => {
                Err(Error::InvalidParameter("averaging side must be at least 1".into()))
            }
            _ => Ok(m as usize),
        }
    }

    /// Side of the square `[0, E]²` on which `d_FS(f, g)` is needed.
    fn extent(&self) -> f64 {
        match self.kind {
            MetricKind::Unit => 1.0,
            MetricKind::Window { side } => side + 1.0,
            MetricKind::Average { side } | MetricKind::AverageMax { side } => side as f64 + 1.0,
        }
    }
}

/// Certified enclosure of a metric value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBracket {
    pub lower: f64,
    pub upper: f64,
    /// Set when no certified derivative bound was available somewhere and
    /// the margin rests on a sampled estimate.
    pub wide_margin: bool,
}

impl MetricBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// A curve sampled on the grid of `[0, E]²` with per-unit-block bounds on
/// `|df|`.
struct SampledCurve {
    dim: usize,
    cells: usize,
    /// Homogeneous coordinates, `(cells+1)²` points row-major.
    points: Vec<Complex64>,
    blocks: usize,
    block_bound: Vec<f64>,
    estimated: bool,
}

impl SampledCurve {
    fn new(curve: &CurveRep, spec: &DynMetricSpec) -> Result<Self> {
        let m = spec.resolution()?;
        let extent = spec.extent();
        let cells = ((extent * m as f64) - 1e-9).ceil().max(1.0) as usize;
        let step = extent / cells as f64;
        let dim = curve.dim();
        let side = cells + 1;
        let mut points = Vec::with_capacity(side * side * (dim + 1));
        for j in 0..side {
            for i in 0..side {
                let p = curve.jet(Complex64::new(i as f64 * step, j as f64 * step)).point();
                points.extend_from_slice(p.coords());
            }
        }
        let blocks = extent.ceil().max(1.0) as usize;
        let mut block_bound = Vec::with_capacity(blocks * blocks);
        let mut estimated = false;
        for by in 0..blocks {
            for bx in 0..blocks {
                let sq = Square::new(Complex64::new(bx as f64, by as f64), 1.0)?;
                let analytic = curve.derivative_bound(&sq);
                let bound = match (analytic, spec.lipschitz) {
                    (Some(a), Some(b)) => a.min(b),
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => {
                        estimated = true;
                        sampled_bound(curve, &sq, m)
                    }
                };
                block_bound.push(bound);
            }
        }
        Ok(Self { dim, cells, points, blocks, block_bound, estimated })
    }

    fn point(&self, i: usize, j: usize) -> &[Complex64] {
        let k = (j * (self.cells + 1) + i) * (self.dim + 1);
        &self.points[k..k + self.dim + 1]
    }
}

/// Twice the sampled maximum of `|df|` on a square, as an uncertified bound.
fn sampled_bound(curve: &CurveRep, sq: &Square, m: usize) -> f64 {
    let k = 2 * m;
    let step = sq.side / k as f64;
    let mut best: f64 = 0.0;
    for j in 0..=k {
        for i in 0..=k {
            let z = sq.corner + Complex64::new(i as f64 * step, j as f64 * step);
            best = best.max(local_lipschitz(curve, z));
        }
    }
    2.0 * best
}

/// Grid of `d_FS(f, g)` with per-cell upper bounds.
struct DistanceGrid {
    cells: usize,
    values: Vec<f64>,
    cell_upper: Vec<f64>,
    wide_margin: bool,
}

impl DistanceGrid {
    fn new(f: &SampledCurve, g: &SampledCurve, extent: f64) -> Self {
        let n = f.cells;
        let side = n + 1;
        let mut values = Vec::with_capacity(side * side);
        for j in 0..side {
            for i in 0..side {
                values.push(fs_distance_raw(f.point(i, j), g.point(i, j)));
            }
        }
        let step = extent / n as f64;
        let half_diag = step * std::f64::consts::FRAC_1_SQRT_2;
        let mut cell_upper = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let corners = values[j * side + i]
                    .max(values[j * side + i + 1])
                    .max(values[(j + 1) * side + i])
                    .max(values[(j + 1) * side + i + 1]);
                let (bx, by) = (
                    ((i as f64 * step) as usize).min(f.blocks - 1),
                    ((j as f64 * step) as usize).min(f.blocks - 1),
                );
                let b = by * f.blocks + bx;
                let lip = f.block_bound[b] + g.block_bound[b];
                cell_upper.push(corners + lip * half_diag);
            }
        }
        Self { cells: n, values, cell_upper, wide_margin: f.estimated || g.estimated }
    }

    fn max_bracket(&self) -> MetricBracket {
        let lower = self.values.iter().fold(0.0f64, |a, &b| a.max(b));
        let upper = self.cell_upper.iter().fold(0.0f64, |a, &b| a.max(b));
        MetricBracket { lower, upper, wide_margin: self.wide_margin }
    }

    /// Bounds on `M(v) = max_{v+[0,1]²} d_FS` for `v` in each grid cell of
    /// `[0, E−1]²`: the window always contains the grid points of
    /// `c+[h,1]²` and lies inside `c+[0,1+h]²`.
    fn window_bounds(&self, m: usize) -> (Vec<f64>, Vec<f64>, usize) {
        let side = self.cells + 1;
        let count = self.cells - m;
        let lo_src = window_max(&self.values, side, side, m);
        let hi_src = window_max(&self.cell_upper, self.cells, self.cells, m + 1);
        let lo_side = side - m + 1;
        let hi_side = self.cells - m;
        let mut lo = Vec::with_capacity(count * count);
        let mut hi = Vec::with_capacity(count * count);
        for j in 0..count {
            for i in 0..count {
                lo.push(lo_src[(j + 1) * lo_side + i + 1]);
                hi.push(hi_src[j * hi_side + i]);
            }
        }
        (lo, hi, count)
    }
}

/// Maxima of all `k×k` windows of a row-major `w×h` array.
fn window_max(data: &[f64], w: usize, h: usize, k: usize) -> Vec<f64> {
    let ow = w + 1 - k;
    let oh = h + 1 - k;
    let mut rows = vec![0.0; ow * h];
    for j in 0..h {
        for i in 0..ow {
            rows[j * ow + i] = data[j * w + i..j * w + i + k].iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        }
    }
    let mut out = vec![0.0; ow * oh];
    for j in 0..oh {
        for i in 0..ow {
            out[j * ow + i] = (j..j + k).map(|r| rows[r * ow + i]).fold(f64::NEG_INFINITY, f64::max);
        }
    }
    out
}

fn bracket_from(spec: &DynMetricSpec, m: usize, grid: &DistanceGrid) -> MetricBracket {
    match spec.kind {
        MetricKind::Unit | MetricKind::Window { .. } => grid.max_bracket(),
        MetricKind::Average { .. } => {
            let (lo, hi, _) = grid.window_bounds(m);
            let n = lo.len() as f64;
            MetricBracket { lower: pairwise_sum(&lo) / n, upper: pairwise_sum(&hi) / n, wide_margin: grid.wide_margin }
        }
        MetricKind::AverageMax { side } => {
            let (lo, hi, count) = grid.window_bounds(m);
            let mut best = MetricBracket { lower: 0.0, upper: 0.0, wide_margin: grid.wide_margin };
            let cell = |v: &[f64], p: usize, q: usize| {
                let block: Vec<f64> =
                    (q * m..(q + 1) * m).flat_map(|j| v[j * count + p * m..j * count + (p + 1) * m].to_vec()).collect();
                pairwise_sum(&block) / block.len() as f64
            };
            for q in 0..side {
                for p in 0..side {
                    best.lower = best.lower.max(cell(&lo, p, q));
                    best.upper = best.upper.max(cell(&hi, p, q));
                }
            }
            best
        }
    }
}

/// Encloses the chosen metric between a grid value and that value plus a
/// Lipschitz margin.
pub fn metric_eval(spec: &DynMetricSpec, f: &CurveRep, g: &CurveRep) -> Result<MetricBracket> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: g.dim() });
    }
    let m = spec.resolution()?;
    if f == g {
        return Ok(MetricBracket { lower: 0.0, upper: 0.0, wide_margin: false });
    }
    let a = SampledCurve::new(f, spec)?;
    let b = SampledCurve::new(g, spec)?;
    Ok(bracket_from(spec, m, &DistanceGrid::new(&a, &b, spec.extent())))
}

/// Upper bound on `max d_FS(f, g)` over the window of `spec`, subdividing
/// cells whose bound exceeds `threshold` up to `depth` times.
fn refined_max_upper(
    spec: &DynMetricSpec,
    f: &CurveRep,
    g: &CurveRep,
    threshold: f64,
    depth: u32,
) -> Result<MetricBracket> {
    if f == g {
        return Ok(MetricBracket { lower: 0.0, upper: 0.0, wide_margin: false });
    }
    let a = SampledCurve::new(f, spec)?;
    let b = SampledCurve::new(g, spec)?;
    let grid = DistanceGrid::new(&a, &b, spec.extent());
    let mut bracket = grid.max_bracket();
    if bracket.upper <= threshold {
        return Ok(bracket);
    }
    let n = grid.cells;
    let side = n + 1;
    let step = spec.extent() / n as f64;
    let dist = |z: Complex64| fs_distance_raw(f.jet(z).point().coords(), g.jet(z).point().coords());
    let uppers: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % n, k / n);
            if grid.cell_upper[k] <= threshold {
                return grid.cell_upper[k];
            }
            let corners = [
                grid.values[j * side + i],
                grid.values[j * side + i + 1],
                grid.values[(j + 1) * side + i],
                grid.values[(j + 1) * side + i + 1],
            ];
            let (bx, by) = (((i as f64 * step) as usize).min(a.blocks - 1), ((j as f64 * step) as usize).min(a.blocks - 1));
            let lip = a.block_bound[by * a.blocks + bx] + b.block_bound[by * a.blocks + bx];
            let origin = Complex64::new(i as f64 * step, j as f64 * step);
            refine_cell(&dist, origin, step, corners, lip, threshold, depth)
        })
        .collect();
    bracket.upper = uppers.iter().fold(0.0f64, |x, &y| x.max(y));
    Ok(bracket)
}

/// Corners ordered `(0,0), (1,0), (0,1), (1,1)`.
fn refine_cell<F: Fn(Complex64) -> f64>(
    dist: &F,
    origin: Complex64,
    step: f64,
    corners: [f64; 4],
    lip: f64,
    threshold: f64,
    depth: u32,
) -> f64 {
    let top = corners.iter().fold(0.0f64, |x, &y| x.max(y));
    let bound = top + lip * step * std::f64::consts::FRAC_1_SQRT_2;
    if bound <= threshold || depth == 0 {
        return bound;
    }
    let h = 0.5 * step;
    let at = |x: f64, y: f64| dist(origin + Complex64::new(x * h, y * h));
    let (s, e, n, w, c) = (at(1.0, 0.0), at(2.0, 1.0), at(1.0, 2.0), at(0.0, 1.0), at(1.0, 1.0));
    let children = [
        (Complex64::new(0.0, 0.0), [corners[0], s, w, c]),
        (Complex64::new(h, 0.0), [s, corners[1], c, e]),
        (Complex64::new(0.0, h), [w, c, corners[2], n]),
        (Complex64::new(h, h), [c, e, n, corners[3]]),
    ];
    children
        .iter()
        .map(|(o, k)| refine_cell(dist, origin + o, h, *k, lip, threshold, depth - 1))
        .fold(0.0f64, f64::max)
}

/// Symmetric matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn<F: Fn(usize, usize) -> f64 + Sync>(n: usize, dist: F) -> Self {
        let rows: Vec<Vec<f64>> =
            (0..n).into_par_iter().map(|i| (0..n).map(|j| if i == j { 0.0 } else { dist(i.min(j), i.max(j)) }).collect()).collect();
        Self { n, data: rows.concat() }
    }

    pub fn from_points<P: Sync, F: Fn(&P, &P) -> f64 + Sync>(points: &[P], metric: F) -> Self {
        Self::from_fn(points.len(), |i, j| metric(&points[i], &points[j]))
    }

    /// Bracket midpoints of `spec` between all pairs of the ensemble, with a
    /// flag set when any bracket had a wide margin.
    pub fn from_ensemble(ensemble: &CurveEnsemble, spec: &DynMetricSpec) -> Result<(Self, bool)> {
        let m = spec.resolution()?;
        let sampled: Vec<SampledCurve> =
            ensemble.curves().par_iter().map(|c| SampledCurve::new(c, spec)).collect::<Result<_>>()?;
        let wide = sampled.iter().any(|s| s.estimated);
        let extent = spec.extent();
        let dm = Self::from_fn(sampled.len(), |i, j| {
            bracket_from(spec, m, &DistanceGrid::new(&sampled[i], &sampled[j], extent)).midpoint()
        });
        Ok((dm, wide))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

const EXACT_LIMIT: usize = 12;
const EXACT_POTENTIAL_LIMIT: usize = 10;

/// Minimum number of sets of diameter `< ε` covering the points: greedy for
/// large sets, exhaustive for at most 12 points.
pub fn covering_number(dm: &DistanceMatrix, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("covering scale must be positive, got {epsilon}")));
    }
    if dm.is_empty() {
        return Ok(0);
    }
    if dm.len() <= EXACT_LIMIT {
        return Ok(exact_cover(dm, epsilon, &vec![0.0; dm.len()], 1.0) as usize);
    }
    Ok(greedy_cover(dm, epsilon).len())
}

/// `inf Σ (1/ε)^{sup_U φ}` over covers by sets of diameter `< ε`: greedy for
/// large sets, exhaustive for at most 10 points.
pub fn covering_number_with_potential(dm: &DistanceMatrix, potential: &[f64], epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("covering scale must lie in (0, 1), got {epsilon}")));
    }
    if potential.len() != dm.len() {
        return Err(Error::DimensionMismatch { expected: dm.len(), found: potential.len() });
    }
    if dm.len() <= EXACT_POTENTIAL_LIMIT {
        return Ok(exact_cover(dm, epsilon, potential, 1.0 / epsilon));
    }
    let cost = greedy_cover(dm, epsilon)
        .iter()
        .map(|set| (1.0 / epsilon).powf(set.iter().map(|&i| potential[i]).fold(f64::NEG_INFINITY, f64::max)))
        .collect::<Vec<_>>();
    Ok(pairwise_sum(&cost))
}

/// Repeatedly takes the ball of radius `ε/2` (diameter `< ε`) that covers
/// the most uncovered points, ties to the lowest index.
fn greedy_cover(dm: &DistanceMatrix, epsilon: f64) -> Vec<Vec<usize>> {
    let n = dm.len();
    let neighbours: Vec<Vec<usize>> =
        (0..n).into_par_iter().map(|i| (0..n).filter(|&j| dm.get(i, j) < 0.5 * epsilon).collect()).collect();
    let mut count: Vec<usize> = neighbours.iter().map(Vec::len).collect();
    let mut covered = vec![false; n];
    let mut remaining = n;
    let mut sets = Vec::new();
    while remaining > 0 {
        let mut best = 0;
        for i in 1..n {
            if count[i] > count[best] {
                best = i;
            }
        }
        let set: Vec<usize> = neighbours[best].iter().copied().filter(|&j| !covered[j]).collect();
        for &j in &set {
            covered[j] = true;
            remaining -= 1;
            for &k in &neighbours[j] {
                count[k] -= 1;
            }
        }
        sets.push(set);
    }
    sets
}

/// Exact minimum of `Σ base^{max φ}` over partitions into sets of diameter
/// `< ε`, by dynamic programming over subsets.
fn exact_cover(dm: &DistanceMatrix, epsilon: f64, potential: &[f64], base: f64) -> f64 {
    let n = dm.len();
    let full = (1usize << n) - 1;
    let mut clique = vec![false; full + 1];
    let mut top = vec![f64::NEG_INFINITY; full + 1];
    clique[0] = true;
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        clique[mask] = clique[rest] && (0..n).filter(|&j| rest >> j & 1 == 1).all(|j| dm.get(i, j) < epsilon);
        top[mask] = top[rest].max(potential[i]);
    }
    let mut best = vec![f64::INFINITY; full + 1];
    best[0] = 0.0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut sub = rest;
        loop {
            let piece = sub | low;
            if clique[piece] {
                let v = base.powf(top[piece]) + best[mask ^ piece];
                if v < best[mask] {
                    best[mask] = v;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    best[full]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub epsilon: f64,
    pub count: usize,
    /// `log₂ #`.
    pub log_count: f64,
    /// `ε^δ log₂ #`.
    pub profile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TameGrowthReport {
    pub delta: f64,
    pub set_size: usize,
    pub rows: Vec<ProfileRow>,
    /// Nonincreasing over the last three rungs.
    pub consistent: bool,
    /// Nonincreasing over every rung.
    pub monotone: bool,
}

impl TameGrowthReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epsilon", "log_count", "profile"])?;
        for r in &self.rows {
            w.write_record([format!("{:.17e}", r.epsilon), format!("{:.17e}", r.log_count), format!("{:.17e}", r.profile)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const DEFAULT_LADDER: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// `ε^δ · log₂ #(X, ε)` along a decreasing ladder of scales.
pub fn tame_growth_profile(dm: &DistanceMatrix, ladder: &[f64], delta: f64) -> Result<TameGrowthReport> {
    if ladder.is_empty() || ladder.iter().any(|&e| !(e > 0.0 && e < 1.0)) || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("scale ladder must be strictly decreasing in (0, 1)".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent must be positive, got {delta}")));
    }
    let rows = ladder
        .iter()
        .map(|&epsilon| {
            let count = covering_number(dm, epsilon)?;
            let log_count = (count as f64).log2();
            Ok(ProfileRow { epsilon, count, log_count, profile: epsilon.powf(delta) * log_count })
        })
        .collect::<Result<Vec<_>>>()?;
    let nonincreasing = |r: &[ProfileRow]| r.windows(2).all(|w| w[1].profile <= w[0].profile);
    let tail = &rows[rows.len().saturating_sub(3)..];
    Ok(TameGrowthReport { delta, set_size: dm.len(), consistent: nonincreasing(tail), monotone: nonincreasing(&rows), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub side: usize,
    /// `d_{a+[0,L]²}(f, g)` with `a = (1+i)/2`.
    pub left: MetricBracket,
    /// `max_{u∈{0..L}²} d̄₁(T^u f, T^u g)`.
    pub right: MetricBracket,
    pub slack: f64,
    pub holds: bool,
}

/// Checks `d_{a+[0,L]²}(f, g) ≤ 4 max_{u∈{0..L}²} d̄₁(T^u f, T^u g)` using
/// the upper bracket on the left and the lower bracket on the right. Cells
/// whose left bound is too coarse to decide are subdivided up to four times.
pub fn metric_comparison_check(f: &CurveRep, g: &CurveRep, side: usize, grid_spacing: f64) -> Result<ComparisonReport> {
    if side < 1 {
        return Err(Error::InvalidParameter("comparison side must be at least 1".into()));
    }
    let a = Complex64::new(0.5, 0.5);
    let left_spec = DynMetricSpec::new(MetricKind::Window { side: side as f64 }, grid_spacing)?;
    let right_spec = DynMetricSpec::new(MetricKind::AverageMax { side: side + 1 }, grid_spacing)?;
    let right = metric_eval(&right_spec, f, g)?;
    let slack = 0.0;
    let left = refined_max_upper(&left_spec, &translate(f, a), &translate(g, a), 4.0 * right.lower + slack, 4)?;
    Ok(ComparisonReport { side, left, right, slack, holds: left.upper <= 4.0 * right.lower + slack })
}
