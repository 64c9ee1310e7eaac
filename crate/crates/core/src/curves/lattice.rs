//! Cubic-pole lattice sums `z ↦ [1 : Σ_λ c_λ/(z+w−λ)³]` over the square
//! lattice `Λ = Lℤ + Lℤi`.
//!
//! Coefficients are stored on a finite square window; every lattice point
//! outside it carries the background coefficient, whose contribution is
//! summed in closed form through the periodic series
//! `Σ_m (x−m)⁻³ = π³ cot(πx) csc²(πx)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::Square;
use crate::projective::FS_SCALE;
use crate::{Error, Result};

const ROWS: i32 = 8;
const SERIES_RADIUS: f64 = 0.3;
const SERIES_TERMS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Chart {
    /// `[1 : f]`.
    Affine,
    /// `[δ³ : c₀ + δ³h]` around the nearest pole.
    Reciprocal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSum {
    period: f64,
    offset: Complex64,
    background: Complex64,
    half_width: usize,
    coeffs: Vec<Complex64>,
}

/// Decomposition `f = c₀/δ³ + h` around the lattice point nearest `z`, in
/// units where the period is 1.
struct Local {
    delta: Complex64,
    c0: Complex64,
    h3: Complex64,
    h4: Complex64,
}

impl LatticeSum {
    /// `coeffs` is the row-major window `(m, n) ∈ [−k, k]²`, index
    /// `(n + k)(2k + 1) + (m + k)`.
    pub fn new(
        period: f64,
        offset: Complex64,
        background: Complex64,
        half_width: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter(format!("lattice period must be positive, got {period}")));
        }
        let side = 2 * half_width + 1;
        if coeffs.len() != side * side {
            return Err(Error::DimensionMismatch { expected: side * side, found: coeffs.len() });
        }
        if !offset.is_finite() || !background.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("lattice data must be finite".into()));
        }
        Ok(Self { period, offset, background, half_width, coeffs })
    }

    /// The exactly periodic sum with every coefficient equal to `a`.
    pub fn periodic(period: f64, a: Complex64) -> Result<Self> {
        Self::new(period, Complex64::new(0.0, 0.0), a, 0, vec![a])
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn offset(&self) -> Complex64 {
        self.offset
    }

    pub fn background(&self) -> Complex64 {
        self.background
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn window(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn window_radius(&self) -> f64 {
        self.half_width as f64 * self.period
    }

    pub fn coefficient(&self, m: i64, n: i64) -> Complex64 {
        let k = self.half_width as i64;
        if m.abs() > k || n.abs() > k {
            return self.background;
        }
        let side = 2 * k + 1;
        self.coeffs[((n + k) * side + (m + k)) as usize]
    }

    /// The same curve with a wider window; new entries take the
    /// background coefficient. Narrower targets are ignored.
    pub fn widened(&self, half_width: usize) -> Self {
        let hw = half_width.max(self.half_width);
        let k = hw as i64;
        let mut coeffs = Vec::with_capacity((2 * hw + 1).pow(2));
        for n in -k..=k {
            for m in -k..=k {
                coeffs.push(self.coefficient(m, n));
            }
        }
        Self { half_width: hw, coeffs, ..self.clone() }
    }

    /// Largest coefficient modulus, background included.
    pub fn max_coefficient(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(self.background.norm(), f64::max)
    }

    pub fn is_periodic(&self) -> bool {
        self.coeffs.iter().all(|c| *c == self.background)
    }

    /// Bound on `sup |df| ≤ sup |f′|/√π` over a square, from
    /// `|f′| ≤ 3 Σ |c_λ|/dist(λ, square)⁴` with the far lattice bounded by an
    /// area integral. `None` when a pole touches the square.
    pub fn derivative_bound(&self, square: &Square) -> Option<f64> {
        const NEAR: i64 = 4;
        let l = self.period;
        let lo = (square.corner + self.offset) / l;
        let hi = lo + Complex64::new(square.side / l, square.side / l);
        let (m_lo, m_hi) = (lo.re.floor() as i64 - NEAR, hi.re.ceil() as i64 + NEAR);
        let (n_lo, n_hi) = (lo.im.floor() as i64 - NEAR, hi.im.ceil() as i64 + NEAR);
        let mut sum = 0.0;
        for n in n_lo..=n_hi {
            for m in m_lo..=m_hi {
                let c = self.coefficient(m, n).norm();
                if c == 0.0 {
                    continue;
                }
                let d = square.distance_to(Complex64::new(m as f64, n as f64) * l - self.offset);
                if d == 0.0 {
                    return None;
                }
                sum += c / d.powi(4);
            }
        }
        // Every omitted lattice point lies at least `far` from the square.
        let far = (NEAR as f64 - 1.0 - std::f64::consts::SQRT_2) * l;
        let perimeter = 2.0 * std::f64::consts::PI * l + 4.0 * square.side;
        sum += self.max_coefficient() / (l * l)
            * (std::f64::consts::PI / (far * far) + perimeter / (3.0 * far.powi(3)));
        Some(3.0 * FS_SCALE * sum)
    }

    /// Poles carried by the window, as `(z, coefficient)` in the curve's own
    /// coordinate.
    pub fn window_poles(&self) -> Vec<(Complex64, Complex64)> {
        let k = self.half_width as i64;
        let mut out = Vec::with_capacity(self.coeffs.len());
        for n in -k..=k {
            for m in -k..=k {
                let lam = Complex64::new(m as f64, n as f64) * self.period;
                out.push((lam - self.offset, self.coefficient(m, n)));
            }
        }
        out
    }

    fn local(&self, z: Complex64) -> Local {
        let s = (z + self.offset) / self.period;
        let (m0, n0) = (s.re.round(), s.im.round());
        let delta = s - Complex64::new(m0, n0);
        let (m0, n0) = (m0 as i64, n0 as i64);
        let c0 = self.coefficient(m0, n0);
        let a = self.background;
        let (mut h3, mut h4) = if a == Complex64::new(0.0, 0.0) {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            let (r3, r4) = regular_lattice_sums(delta);
            (a * r3, a * r4)
        };
        let k = self.half_width as i64;
        for n in -k..=k {
            for m in -k..=k {
                if m == m0 && n == n0 {
                    continue;
                }
                let d = self.coefficient(m, n) - a;
                if d == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let x = s - Complex64::new(m as f64, n as f64);
                let inv = x.inv();
                let inv3 = inv * inv * inv;
                h3 += d * inv3;
                h4 += d * inv3 * inv;
            }
        }
        Local { delta, c0, h3, h4 }
    }

    fn chart_for(&self, loc: &Local) -> Chart {
        let zero = Complex64::new(0.0, 0.0);
        if loc.c0 == zero {
            Chart::Affine
        } else if loc.delta == zero {
            Chart::Reciprocal
        } else {
            let d3 = loc.delta * loc.delta * loc.delta;
            let f = (loc.c0 / d3 + loc.h3) / self.period.powi(3);
            if f.norm() > 1.0 {
                Chart::Reciprocal
            } else {
                Chart::Affine
            }
        }
    }

    /// Homogeneous value and `z`-derivative.
    pub(crate) fn jet(&self, z: Complex64) -> ([Complex64; 2], [Complex64; 2]) {
        let loc = self.local(z);
        let chart = self.chart_for(&loc);
        self.jet_from(&loc, chart)
    }

    #[cfg(test)]
    pub(crate) fn jet_in_chart(&self, z: Complex64, chart: Chart) -> ([Complex64; 2], [Complex64; 2]) {
        let loc = self.local(z);
        self.jet_from(&loc, chart)
    }

    fn jet_from(&self, loc: &Local, chart: Chart) -> ([Complex64; 2], [Complex64; 2]) {
        let l = self.period;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let d = loc.delta;
        match chart {
            Chart::Affine => {
                let inv = d.inv();
                let inv3 = inv * inv * inv;
                let (f, fs) = if loc.c0 == zero {
                    (loc.h3, loc.h4)
                } else {
                    (loc.c0 * inv3 + loc.h3, loc.c0 * inv3 * inv + loc.h4)
                };
                let l3 = l * l * l;
                ([one, f / l3], [zero, -3.0 * fs / (l3 * l)])
            }
            Chart::Reciprocal => {
                let d2 = d * d;
                let d3 = d2 * d;
                let l2 = l * l;
                let value = [d3 * (l2 * l), loc.c0 + d3 * loc.h3];
                let deriv = [3.0 * d2 * l2, 3.0 * (d2 * loc.h3 - d3 * loc.h4) / l];
                (value, deriv)
            }
        }
    }
}

/// `Σ' (x−μ)⁻³` and `Σ' (x−μ)⁻⁴` over the unit square lattice, omitting
/// `μ = 0`, for `x` in the fundamental cell around 0.
fn regular_lattice_sums(x: Complex64) -> (Complex64, Complex64) {
    let mut s3 = Complex64::new(0.0, 0.0);
    let mut s4 = Complex64::new(0.0, 0.0);
    for n in (1..=ROWS).rev() {
        for sign in [-1.0, 1.0] {
            let (t3, t4) = row_sums(x - Complex64::new(0.0, sign * n as f64));
            s3 += t3;
            s4 += t4;
        }
    }
    let (r3, r4) = if x.norm() < SERIES_RADIUS {
        punctured_row_series(x)
    } else {
        let (t3, t4) = row_sums(x);
        let inv = x.inv();
        let inv3 = inv * inv * inv;
        (t3 - inv3, t4 - inv3 * inv)
    };
    (s3 + r3, s4 + r4)
}

/// `(Σ_m (x−m)⁻³, Σ_m (x−m)⁻⁴)` for `x` away from the real integers.
fn row_sums(x: Complex64) -> (Complex64, Complex64) {
    let i = Complex64::new(0.0, 1.0);
    let (q, sign) = if x.im >= 0.0 {
        ((2.0 * PI * i * x).exp(), 1.0)
    } else {
        ((-2.0 * PI * i * x).exp(), -1.0)
    };
    let qm1 = q - 1.0;
    let cot = sign * i * (q + 1.0) / qm1;
    let csc2 = -4.0 * q / (qm1 * qm1);
    let t3 = PI.powi(3) * cot * csc2;
    let t4 = PI.powi(4) / 3.0 * (csc2 * csc2 + 2.0 * cot * cot * csc2);
    (t3, t4)
}

/// Power series of `Σ_{m≠0} (x−m)⁻³` and `Σ_{m≠0} (x−m)⁻⁴` near 0.
fn punctured_row_series(x: Complex64) -> (Complex64, Complex64) {
    let (c3, c4) = series_coefficients();
    let x2 = x * x;
    let mut r3 = Complex64::new(0.0, 0.0);
    let mut r4 = Complex64::new(0.0, 0.0);
    for j in (0..SERIES_TERMS).rev() {
        r3 = r3 * x2 + c3[j];
        r4 = r4 * x2 + c4[j];
    }
    (r3 * x, r4)
}

fn series_coefficients() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| {
        let binom = |n: usize, k: usize| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
        // x^k with k = 2j+1 for the cubic sum, k = 2j for the quartic one.
        let c3 = (0..SERIES_TERMS)
            .map(|j| {
                let k = 2 * j + 1;
                -2.0 * binom(k + 2, 2) * zeta(k + 3)
            })
            .collect();
        let c4 = (0..SERIES_TERMS)
            .map(|j| {
                let k = 2 * j;
                2.0 * binom(k + 3, 3) * zeta(k + 4)
            })
            .collect();
        (c3, c4)
    })
}

/// Riemann zeta at an integer `s ≥ 2` by Euler–Maclaurin summation.
pub(crate) fn zeta(s: usize) -> f64 {
    let s_f = s as f64;
    let n: f64 = 24.0;
    let mut head = 0.0;
    for k in (1..24).rev() {
        head += (k as f64).powf(-s_f);
    }
    let tail = n.powf(1.0 - s_f) / (s_f - 1.0) + 0.5 * n.powf(-s_f) + s_f / 12.0 * n.powf(-s_f - 1.0)
        - s_f * (s_f + 1.0) * (s_f + 2.0) / 720.0 * n.powf(-s_f - 3.0)
        + s_f * (s_f + 1.0) * (s_f + 2.0) * (s_f + 3.0) * (s_f + 4.0) / 30240.0 * n.powf(-s_f - 5.0);
    head + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Square partial sums with two Richardson steps for the `N⁻²` and
    /// `N⁻⁴` tails.
    fn brute_lattice_sum(x: Complex64, power: i32) -> Complex64 {
        let partial = |big: i64| {
            let mut acc = c(0.0, 0.0);
            for n in -big..=big {
                for m in -big..=big {
                    if m == 0 && n == 0 {
                        continue;
                    }
                    acc += (x - c(m as f64, n as f64)).powi(-power);
                }
            }
            acc
        };
        let (a, b, d) = (partial(200), partial(400), partial(800));
        let r1 = b + (b - a) / 3.0;
        let r2 = d + (d - b) / 3.0;
        r2 + (r2 - r1) / 15.0
    }

    #[test]
    fn zeta_values() {
        assert!((zeta(2) - PI * PI / 6.0).abs() < 1e-13);
        assert!((zeta(4) - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(6) - PI.powi(6) / 945.0).abs() < 1e-14);
    }

    #[test]
    fn regular_sums_match_brute_force() {
        for x in [c(0.05, 0.02), c(0.25, -0.1), c(-0.4, 0.45), c(0.5, 0.5), c(0.31, 0.0)] {
            let (r3, r4) = regular_lattice_sums(x);
            let b3 = brute_lattice_sum(x, 3);
            let b4 = brute_lattice_sum(x, 4);
            assert!((r3 - b3).norm() < 1e-9, "{x}: {r3} vs {b3}");
            assert!((r4 - b4).norm() < 1e-8, "{x}: {r4} vs {b4}");
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        for x in [c(0.29, 0.0), c(0.0, 0.29), c(0.2, 0.2)] {
            let (s3, s4) = punctured_row_series(x);
            let (t3, t4) = row_sums(x);
            let inv = x.inv();
            assert!((s3 - (t3 - inv.powi(3))).norm() < 1e-10);
            assert!((s4 - (t4 - inv.powi(4))).norm() < 1e-10);
        }
    }

    #[test]
    fn periodic_sum_is_periodic() {
        let f = LatticeSum::periodic(3.0, c(2.0, 0.5)).unwrap();
        let z = c(0.4, 1.1);
        let (a, _) = f.jet(z);
        let (b, _) = f.jet(z + c(3.0, -6.0));
        let fa = a[1] / a[0];
        let fb = b[1] / b[0];
        assert!((fa - fb).norm() < 1e-12 * fa.norm().max(1.0));
    }

    #[test]
    fn symmetric_point_is_a_zero_of_the_periodic_sum() {
        // The half-period (1+i)/2 is fixed by z ↦ iz about the cell
        // centre, which forces the odd sum to vanish there.
        let f = LatticeSum::periodic(1.0, c(1.0, 0.0)).unwrap();
        let (v, _) = f.jet(c(0.5, 0.5));
        assert!((v[1] / v[0]).norm() < 1e-12);
    }

    #[test]
    fn pole_maps_to_infinity() {
        let f = LatticeSum::periodic(10.0, c(2.0, 0.0)).unwrap();
        let (v, _) = f.jet(c(0.0, 0.0));
        assert_eq!(v[0], c(0.0, 0.0));
        assert!(v[1].norm() > 0.0);
    }

    fn gram_lipschitz(v: [Complex64; 2], d: [Complex64; 2]) -> f64 {
        crate::curves::Jet { value: v.to_vec(), deriv: d.to_vec() }.lipschitz()
    }

    #[test]
    fn charts_agree() {
        use rand::Rng;
        let mut rng = crate::rng::stream(7, &[1]);
        let coeffs = (0..25).map(|_| crate::rng::uniform_in_disk(&mut rng, c(2.0, 0.0), 1.0)).collect();
        let f = LatticeSum::new(6.0, c(1.1, 2.3), c(2.0, 0.0), 2, coeffs).unwrap();
        for _ in 0..1000 {
            let z = c(rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0));
            // Bias half the probes towards the |f| = 1 circle around poles.
            let z = if rng.gen_bool(0.5) {
                let s = (z + f.offset()) / 6.0;
                let pole = c(s.re.round(), s.im.round()) * 6.0 - f.offset();
                pole + Complex64::from_polar(rng.gen_range(0.8..1.8), rng.gen_range(0.0..6.3))
            } else {
                z
            };
            let (va, da) = f.jet_in_chart(z, Chart::Affine);
            let (vb, db) = f.jet_in_chart(z, Chart::Reciprocal);
            let a = gram_lipschitz(va, da);
            let b = gram_lipschitz(vb, db);
            assert!((a - b).abs() <= 1e-8 * a.max(b).max(1e-300), "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let coeffs = (0..9).map(|i| c(2.0 + 0.1 * i as f64, -0.05 * i as f64)).collect();
        let f = LatticeSum::new(5.0, c(0.3, 0.7), c(2.0, 0.0), 1, coeffs).unwrap();
        let z = c(1.3, -0.4);
        let (v, d) = f.jet_in_chart(z, Chart::Affine);
        let h = 1e-6;
        let (vp, _) = f.jet_in_chart(z + h, Chart::Affine);
        let (vm, _) = f.jet_in_chart(z - h, Chart::Affine);
        let fd = (vp[1] - vm[1]) / (2.0 * h);
        assert!((fd - d[1]).norm() < 1e-7 * d[1].norm().max(1e-3), "{fd} vs {}", d[1]);
        assert_eq!(v[0], c(1.0, 0.0));
    }
}
