//! Energy integrals of `|df|²` and the observables built from them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{local_lipschitz, CurveRep, Square};
use crate::numeric::pairwise_sum;
use crate::{Error, Result};

/// A value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// `|df|²` sampled at the cell midpoints of a square.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub square: Square,
    pub resolution: usize,
    /// Row-major, row index along the imaginary axis.
    pub values: Vec<f64>,
}

impl GridField {
    pub fn sample(curve: &CurveRep, square: Square, resolution: usize) -> Result<Self> {
        Self::sample_with(square, resolution, |z| {
            let d = local_lipschitz(curve, z);
            d * d
        })
    }

    pub(crate) fn sample_with<F: Fn(Complex64) -> f64 + Sync>(
        square: Square,
        resolution: usize,
        f: F,
    ) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidParameter(format!("grid resolution must be at least 2, got {resolution}")));
        }
        let h = square.side / resolution as f64;
        let values = (0..resolution)
            .into_par_iter()
            .flat_map_iter(|j| {
                let y = square.corner.im + (j as f64 + 0.5) * h;
                let f = &f;
                (0..resolution).map(move |i| f(Complex64::new(square.corner.re + (i as f64 + 0.5) * h, y)))
            })
            .collect();
        Ok(Self { square, resolution, values })
    }

    pub fn spacing(&self) -> f64 {
        self.square.side / self.resolution as f64
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        let h = self.spacing();
        self.square.corner + Complex64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.resolution + i]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Midpoint-rule integral of the sampled field.
    pub fn integral(&self) -> f64 {
        let h = self.spacing();
        pairwise_sum(&self.values) * h * h
    }

    /// CSV with header `re,im,df2`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["re", "im", "df2"])?;
        for j in 0..self.resolution {
            for i in 0..self.resolution {
                let z = self.point(i, j);
                w.write_record(&[format!("{:.17e}", z.re), format!("{:.17e}", z.im), format!("{:.17e}", self.get(i, j))])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `∫_S |df|²` by the midpoint rule at `resolution` per side, with the
/// difference to the half-resolution rule as error bound.
pub fn energy_integral(curve: &CurveRep, square: Square, resolution: usize) -> Result<Estimate> {
    if resolution < 8 {
        return Err(Error::InvalidParameter(format!("energy resolution must be at least 8, got {resolution}")));
    }
    let square = Square::new(square.corner, square.side)?;
    if let CurveRep::Constant(_) = curve {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let fine = GridField::sample(curve, square, resolution)?.integral();
    let coarse = GridField::sample(curve, square, resolution / 2)?.integral();
    Ok(Estimate { value: fine, error: (fine - coarse).abs() })
}

/// Translation search for the energy density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySearch {
    /// Samples of `|df|²` per side length `L`; rounded up to a multiple of 16.
    pub samples_per_side: usize,
    /// Region the translated squares must meet; defaults to the curve's
    /// carrier.
    pub domain: Option<Square>,
}

impl Default for DensitySearch {
    fn default() -> Self {
        Self { samples_per_side: 256, domain: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    /// `max_a (1/L²)∫_{a+[0,L]²}|df|²` over the searched translations, a
    /// lower bound on the supremum.
    pub value: f64,
    pub side: f64,
    pub best_corner: [f64; 2],
}

/// Square-average energy density at side `side`: translations on a coarse
/// lattice of spacing `side/4`, then refined at `side/16` around the best.
pub fn energy_density(curve: &CurveRep, side: f64, search: &DensitySearch) -> Result<DensityEstimate> {
    if !(side >= 1.0) || !side.is_finite() {
        return Err(Error::InvalidParameter(format!("density side must be at least 1, got {side}")));
    }
    if let CurveRep::Constant(_) = curve {
        return Ok(DensityEstimate { value: 0.0, side, best_corner: [0.0, 0.0] });
    }
    if let CurveRep::Glued(_) = curve {
        if search.domain.is_none() {
            return Err(Error::UnsupportedCurve("glued curves need an explicit density search domain".into()));
        }
    }
    let domain = search.domain.unwrap_or_else(|| curve.carrier());
    let k = search.samples_per_side.max(16).div_ceil(16) * 16;
    let h = side / k as f64;
    let blocks = ((domain.side + 2.0 * side) / h).ceil() as usize;
    let region = Square::new(domain.corner - Complex64::new(side, side), blocks as f64 * h)?;
    let grid = GridField::sample(curve, region, blocks)?;
    let table = SummedArea::new(&grid.values, blocks);
    let last = blocks - k;
    let block_sum = |i: usize, j: usize| table.block(i, j, k);
    let coarse = k / 4;
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    let consider = |i: usize, j: usize, best: &mut (usize, usize, f64)| {
        let s = block_sum(i, j);
        if s > best.2 {
            *best = (i, j, s);
        }
    };
    for j in (0..=last).step_by(coarse) {
        for i in (0..=last).step_by(coarse) {
            consider(i, j, &mut best);
        }
    }
    let fine = k / 16;
    let (ci, cj) = (best.0, best.1);
    let lo = |c: usize| c.saturating_sub(coarse);
    let hi = |c: usize| (c + coarse).min(last);
    for j in (lo(cj)..=hi(cj)).step_by(fine) {
        for i in (lo(ci)..=hi(ci)).step_by(fine) {
            consider(i, j, &mut best);
        }
    }
    let corner = region.corner + Complex64::new(best.0 as f64 * h, best.1 as f64 * h);
    Ok(DensityEstimate { value: best.2 * h * h / (side * side), side, best_corner: [corner.re, corner.im] })
}

struct SummedArea {
    n: usize,
    table: Vec<f64>,
}

impl SummedArea {
    fn new(values: &[f64], n: usize) -> Self {
        let w = n + 1;
        let mut table = vec![0.0; w * w];
        for j in 0..n {
            let mut row = 0.0;
            for i in 0..n {
                row += values[j * n + i];
                table[(j + 1) * w + i + 1] = table[j * w + i + 1] + row;
            }
        }
        Self { n, table }
    }

    fn block(&self, i: usize, j: usize, k: usize) -> f64 {
        let w = self.n + 1;
        let at = |a: usize, b: usize| self.table[b * w + a];
        at(i + k, j + k) - at(i, j + k) - at(i + k, j) + at(i, j)
    }
}

/// `ψ(f) = 2(N+1)|df|²(0)`.
pub fn psi(curve: &CurveRep) -> f64 {
    let d = local_lipschitz(curve, Complex64::new(0.0, 0.0));
    2.0 * (curve.dim() as f64 + 1.0) * d * d
}

/// `2(N+1)∫_{[0,1]²}|df|²`.
pub fn psi1(curve: &CurveRep, resolution: usize) -> Result<f64> {
    let unit = Square { corner: Complex64::new(0.0, 0.0), side: 1.0 };
    let grid = GridField::sample(curve, unit, resolution)?;
    Ok(2.0 * (curve.dim() as f64 + 1.0) * grid.integral())
}

/// `(2(N+1)/π)∫_{|z|<1}|df|²`, by the midpoint rule in polar coordinates.
pub fn psi2(curve: &CurveRep, resolution: usize) -> Result<f64> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!("disk resolution must be at least 2, got {resolution}")));
    }
    let nr = resolution;
    let nt = 4 * resolution;
    let dr = 1.0 / nr as f64;
    let dt = 2.0 * PI / nt as f64;
    let rings: Vec<f64> = (0..nr)
        .map(|i| {
            let r = (i as f64 + 0.5) * dr;
            let ring: Vec<f64> = (0..nt)
                .map(|j| {
                    let d = local_lipschitz(curve, Complex64::from_polar(r, (j as f64 + 0.5) * dt));
                    d * d
                })
                .collect();
            pairwise_sum(&ring) * r
        })
        .collect();
    let integral = pairwise_sum(&rings) * dr * dt;
    Ok(2.0 * (curve.dim() as f64 + 1.0) / PI * integral)
}

/// `T(R, f) = ∫₁^R (∫_{|z|<r}|df|²) dr/r`, evaluated as the single integral
/// `∫_{|z|<R} |df|² log(R/max(1,|z|))` in polar coordinates by adaptive
/// Gauss–Legendre cubature started from `resolution` cells per side.
pub fn nsa_characteristic(curve: &CurveRep, radius: f64, resolution: usize) -> Result<Estimate> {
    nsa_characteristic_with(curve, radius, resolution, 1e-7)
}

/// [`nsa_characteristic`] with a chosen relative tolerance.
pub fn nsa_characteristic_with(curve: &CurveRep, radius: f64, resolution: usize, rel_tol: f64) -> Result<Estimate> {
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {rel_tol}")));
    }
    if !(radius > 1.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("characteristic radius must exceed 1, got {radius}")));
    }
    if let CurveRep::Constant(_) = curve {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let integrand = |r: f64, t: f64| {
        let d = local_lipschitz(curve, Complex64::from_polar(r, t));
        d * d * r * (radius / r.max(1.0)).ln()
    };
    let res = resolution.max(1);
    let inner = Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 2.0 * PI };
    let outer = Rect { x0: 1.0, x1: radius, y0: 0.0, y1: 2.0 * PI };
    let cfg = Cubature { rel_tol, abs_tol: 1e-9, max_evals: 4_000_000 };
    let a = adaptive_cubature(&integrand, inner, res.div_ceil(4).max(2), res, &cfg);
    let b = adaptive_cubature(&integrand, outer, res, 4 * res, &cfg);
    Ok(Estimate { value: a.value + b.value, error: a.error + b.error })
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

struct Cubature {
    rel_tol: f64,
    abs_tol: f64,
    max_evals: usize,
}

struct Cell {
    rect: Rect,
    value: f64,
    error: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

const GL3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
const GL2_NODE: f64 = 0.577_350_269_189_625_8;

/// Tensor 3-point Gauss–Legendre with the embedded 2-point rule as error
/// estimate.
fn gauss_cell<F: Fn(f64, f64) -> f64>(f: &F, r: Rect) -> Cell {
    let (cx, hx) = (0.5 * (r.x0 + r.x1), 0.5 * (r.x1 - r.x0));
    let (cy, hy) = (0.5 * (r.y0 + r.y1), 0.5 * (r.y1 - r.y0));
    let mut q3 = 0.0;
    for (xi, wx) in GL3_NODES.iter().zip(GL3_WEIGHTS) {
        for (yi, wy) in GL3_NODES.iter().zip(GL3_WEIGHTS) {
            q3 += wx * wy * f(cx + hx * xi, cy + hy * yi);
        }
    }
    let mut q2 = 0.0;
    for sx in [-GL2_NODE, GL2_NODE] {
        for sy in [-GL2_NODE, GL2_NODE] {
            q2 += f(cx + hx * sx, cy + hy * sy);
        }
    }
    let area = hx * hy;
    Cell { rect: r, value: q3 * area, error: ((q3 - q2) * area).abs() }
}

/// Global adaptive cubature: the cell with the largest error estimate is
/// split in four until the total error meets the tolerance.
fn adaptive_cubature<F: Fn(f64, f64) -> f64 + Sync>(
    f: &F,
    rect: Rect,
    nx: usize,
    ny: usize,
    cfg: &Cubature,
) -> Estimate {
    let dx = (rect.x1 - rect.x0) / nx as f64;
    let dy = (rect.y1 - rect.y0) / ny as f64;
    let cells: Vec<Cell> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let r = Rect {
                x0: rect.x0 + i as f64 * dx,
                x1: rect.x0 + (i + 1) as f64 * dx,
                y0: rect.y0 + j as f64 * dy,
                y1: rect.y0 + (j + 1) as f64 * dy,
            };
            gauss_cell(f, r)
        })
        .collect();
    let mut evals = 13 * cells.len();
    let mut heap: BinaryHeap<Cell> = cells.into_iter().collect();
    loop {
        let (value, error) = totals(&heap);
        if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) || evals >= cfg.max_evals {
            return Estimate { value, error };
        }
        // Split a batch of the worst cells at once to amortise the totals.
        let batch = (heap.len() / 8).max(1);
        let worst: Vec<Cell> = (0..batch).filter_map(|_| heap.pop()).collect();
        let children: Vec<Cell> = worst
            .par_iter()
            .flat_map_iter(|c| {
                let r = c.rect;
                let (mx, my) = (0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1));
                [
                    Rect { x0: r.x0, x1: mx, y0: r.y0, y1: my },
                    Rect { x0: mx, x1: r.x1, y0: r.y0, y1: my },
                    Rect { x0: r.x0, x1: mx, y0: my, y1: r.y1 },
                    Rect { x0: mx, x1: r.x1, y0: my, y1: r.y1 },
                ]
                .into_iter()
                .map(|q| gauss_cell(f, q))
            })
            .collect();
        evals += 13 * children.len();
        heap.extend(children);
    }
}

fn totals(heap: &BinaryHeap<Cell>) -> (f64, f64) {
    let mut cells: Vec<&Cell> = heap.iter().collect();
    // Heap iteration order is unspecified; sort for a reproducible sum.
    cells.sort_by(|a, b| {
        (a.rect.x0, a.rect.y0, a.rect.x1).partial_cmp(&(b.rect.x0, b.rect.y0, b.rect.x1)).unwrap_or(Ordering::Equal)
    });
    let values: Vec<f64> = cells.iter().map(|c| c.value).collect();
    let errors: Vec<f64> = cells.iter().map(|c| c.error).collect();
    (pairwise_sum(&values), pairwise_sum(&errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{rescale, LatticeSum, Polynomial};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// `∫_{[−T,T]²} (1/π)(1+x²+y²)⁻²`: closed-form inner integral, Simpson
    /// outer integral.
    fn line_energy_oracle(t: f64) -> f64 {
        let inner = |x: f64| {
            let a2 = 1.0 + x * x;
            let a = a2.sqrt();
            2.0 * (t / (2.0 * a2 * (a2 + t * t)) + (t / a).atan() / (2.0 * a2 * a))
        };
        let n = 20_000;
        let h = 2.0 * t / n as f64;
        let mut s = inner(-t) + inner(t);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * inner(-t + i as f64 * h);
        }
        s * h / 3.0 / PI
    }

    #[test]
    fn line_energy_over_big_square() {
        let sq = Square::centered(c(0.0, 0.0), 50.0).unwrap();
        let e = energy_integral(&CurveRep::line(), sq, 2048).unwrap();
        let oracle = line_energy_oracle(50.0);
        assert!((oracle - 1.0).abs() < 1e-3);
        assert!((e.value - oracle).abs() <= e.error.max(1e-9), "{} vs {oracle} ± {}", e.value, e.error);
        assert!((e.value - 1.0).abs() < 1e-3);
    }

    #[test]
    fn periodic_cell_energy_is_three() {
        let f = CurveRep::LatticeSum(LatticeSum::periodic(8.0, c(2.0, 0.0)).unwrap());
        let cell = Square::new(c(-4.0, -4.0), 8.0).unwrap();
        let e = energy_integral(&f, cell, 256).unwrap();
        assert!((e.value - 3.0).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn constant_observables_vanish() {
        let f = CurveRep::Constant(crate::ProjectivePoint::origin(2));
        assert_eq!(psi(&f), 0.0);
        assert_eq!(psi1(&f, 8).unwrap(), 0.0);
        assert_eq!(psi2(&f, 8).unwrap(), 0.0);
        assert_eq!(nsa_characteristic(&f, 3.0, 8).unwrap().value, 0.0);
    }

    #[test]
    fn line_psi_values() {
        assert!((psi(&CurveRep::line()) - 4.0 / PI).abs() < 1e-14);
        // ψ₂ of [1:z]: (4/π)(1/2).
        assert!((psi2(&CurveRep::line(), 200).unwrap() - 2.0 / PI).abs() < 1e-4);
    }

    #[test]
    fn line_characteristic_at_three() {
        let t = nsa_characteristic(&CurveRep::line(), 3.0, 8).unwrap();
        assert!((t.value - 0.5 * 5f64.ln()).abs() < 1e-6, "{t:?}");
    }

    #[test]
    fn characteristic_rejects_small_radius() {
        assert!(nsa_characteristic(&CurveRep::line(), 1.0, 8).is_err());
    }

    #[test]
    fn periodic_density_is_energy_per_cell() {
        let f = CurveRep::LatticeSum(LatticeSum::periodic(4.0, c(2.0, 0.0)).unwrap());
        let search = DensitySearch { samples_per_side: 128, domain: None };
        let rho = energy_density(&f, 4.0, &search).unwrap();
        assert!((rho.value * 16.0 - 3.0).abs() < 0.05, "{rho:?}");
    }

    #[test]
    fn rational_density_is_small() {
        let rho = energy_density(&CurveRep::line(), 100.0, &DensitySearch { samples_per_side: 512, domain: None })
            .unwrap();
        assert!(rho.value <= 1e-4 * 1.001 && rho.value > 0.9e-4, "{rho:?}");
    }

    #[test]
    fn density_scales_under_rescaling() {
        let g = CurveRep::LatticeSum(LatticeSum::periodic(4.0, c(2.0, 0.0)).unwrap());
        let f = rescale(&g, 0.5).unwrap();
        let search = DensitySearch { samples_per_side: 128, domain: None };
        let rg = energy_density(&g, 4.0, &search).unwrap().value;
        let rf = energy_density(&f, 8.0, &search).unwrap().value;
        assert!((rf - 0.25 * rg).abs() < 1e-12 * rg.max(1.0), "{rf} vs {rg}");
    }

    #[test]
    fn grid_field_csv_header() {
        let f = CurveRep::rational(vec![Polynomial::constant(c(1.0, 0.0)), Polynomial::identity()]).unwrap();
        let g = GridField::sample(&f, Square::new(c(0.0, 0.0), 1.0).unwrap(), 2).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("re,im,df2\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
