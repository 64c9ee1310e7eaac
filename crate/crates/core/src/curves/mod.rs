//! Holomorphic curves `ℂ → ℂP^N` with exact evaluation of the homogeneous
//! value and its derivative.

mod certify;
mod energy;
mod glue;
mod lattice;
mod poly;
mod serial;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::projective::{ProjectivePoint, FS_SCALE};
use crate::{Error, Result};

pub use certify::{
    brody_verify, certify_brody, nondegeneracy_check, BrodyCertificate, BrodyConfig, NondegeneracyReport, Verdict,
};
pub use energy::{
    energy_density, energy_integral, nsa_characteristic, nsa_characteristic_with, psi, psi1, psi2, DensityEstimate, DensitySearch, Estimate,
    GridField,
};
pub use glue::{glue, glue_with_amplitude, model_sup, solve_amplitude, AmplitudeNorm, GlueConfig, Glued};
pub use lattice::LatticeSum;
pub use poly::Polynomial;
pub use serial::CurveDoc;

/// Axis-aligned square `corner + [0, side]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub corner: Complex64,
    pub side: f64,
}

impl Square {
    pub fn new(corner: Complex64, side: f64) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() || !corner.is_finite() {
            return Err(Error::InvalidParameter(format!("degenerate square of side {side}")));
        }
        Ok(Self { corner, side })
    }

    pub fn centered(center: Complex64, half_side: f64) -> Result<Self> {
        Self::new(center - Complex64::new(half_side, half_side), 2.0 * half_side)
    }

    pub fn center(&self) -> Complex64 {
        self.corner + Complex64::new(0.5 * self.side, 0.5 * self.side)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let d = z - self.corner;
        d.re >= 0.0 && d.im >= 0.0 && d.re <= self.side && d.im <= self.side
    }

    /// Smallest square containing both.
    pub fn union(&self, other: &Square) -> Square {
        let lo_re = self.corner.re.min(other.corner.re);
        let lo_im = self.corner.im.min(other.corner.im);
        let hi_re = (self.corner.re + self.side).max(other.corner.re + other.side);
        let hi_im = (self.corner.im + self.side).max(other.corner.im + other.side);
        Square { corner: Complex64::new(lo_re, lo_im), side: (hi_re - lo_re).max(hi_im - lo_im) }
    }

    pub fn translated(&self, by: Complex64) -> Square {
        Square { corner: self.corner + by, side: self.side }
    }

    pub fn scaled(&self, factor: f64) -> Square {
        Square { corner: self.corner * factor, side: self.side * factor }
    }

    /// Distance from `z` to the square (0 inside).
    pub fn distance_to(&self, z: Complex64) -> f64 {
        let d = z - self.corner;
        let dx = (-d.re).max(d.re - self.side).max(0.0);
        let dy = (-d.im).max(d.im - self.side).max(0.0);
        dx.hypot(dy)
    }
}

/// Homogeneous value `F(z)` and derivative `F′(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: Vec<Complex64>,
    pub deriv: Vec<Complex64>,
}

impl Jet {
    /// `|df|` from the Gram form `(1/π)·Σ_{i<j}|F_iF_j′ − F_jF_i′|²/‖F‖⁴`.
    pub fn lipschitz(&self) -> f64 {
        let scale = self.value.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let inv = 1.0 / scale;
        let mut norm2 = 0.0;
        for c in &self.value {
            norm2 += (c * inv).norm_sqr();
        }
        let mut wedge = 0.0;
        let n = self.value.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.value[i] * self.deriv[j] - self.value[j] * self.deriv[i];
                wedge += (w * inv * inv).norm_sqr();
            }
        }
        FS_SCALE * wedge.sqrt() / norm2
    }

    pub fn point(&self) -> ProjectivePoint {
        ProjectivePoint::new(self.value.clone()).expect("curve jets never vanish")
    }
}

/// A holomorphic curve `ℂ → ℂP^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveDoc", into = "CurveDoc")]
pub enum CurveRep {
    Constant(ProjectivePoint),
    /// Homogeneous polynomial components `[p₀ : … : p_N]`.
    Rational(Vec<Polynomial>),
    /// `[1 : Σ_λ c_λ/(z+w−λ)³]` into `ℂP¹`.
    LatticeSum(LatticeSum),
    /// `z ↦ inner(z + shift)`.
    Translated { inner: Box<CurveRep>, shift: Complex64 },
    /// `z ↦ inner(factor·z)`.
    Rescaled { inner: Box<CurveRep>, factor: f64 },
    Glued(Box<Glued>),
}

impl CurveRep {
    pub fn rational(components: Vec<Polynomial>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::InvalidParameter("a rational curve needs at least two components".into()));
        }
        if components.iter().all(Polynomial::is_zero) {
            return Err(Error::InvalidPoint);
        }
        Ok(CurveRep::Rational(components))
    }

    /// The degree-one curve `[1 : z]`.
    pub fn line() -> Self {
        CurveRep::Rational(vec![Polynomial::constant(Complex64::new(1.0, 0.0)), Polynomial::identity()])
    }

    /// Target dimension `N`.
    pub fn dim(&self) -> usize {
        match self {
            CurveRep::Constant(p) => p.dim(),
            CurveRep::Rational(c) => c.len() - 1,
            CurveRep::LatticeSum(_) => 1,
            CurveRep::Translated { inner, .. } | CurveRep::Rescaled { inner, .. } => inner.dim(),
            CurveRep::Glued(g) => g.inner().dim(),
        }
    }

    pub fn jet(&self, z: Complex64) -> Jet {
        match self {
            CurveRep::Constant(p) => {
                Jet { value: p.coords().to_vec(), deriv: vec![Complex64::new(0.0, 0.0); p.coords().len()] }
            }
            CurveRep::Rational(components) => rational_jet(components, z),
            CurveRep::LatticeSum(l) => {
                let (value, deriv) = l.jet(z);
                Jet { value: value.to_vec(), deriv: deriv.to_vec() }
            }
            CurveRep::Translated { inner, shift } => inner.jet(z + shift),
            CurveRep::Rescaled { inner, factor } => {
                let mut j = inner.jet(z * factor);
                for d in &mut j.deriv {
                    *d *= factor;
                }
                j
            }
            CurveRep::Glued(g) => g.jet(z),
        }
    }

    /// A bounding square outside of which the curve carries no structure
    /// beyond what its representation repeats (periodic background, or the
    /// decay of a rational map).
    pub fn carrier(&self) -> Square {
        match self {
            CurveRep::Constant(_) => Square { corner: Complex64::new(-0.5, -0.5), side: 1.0 },
            CurveRep::Rational(components) => {
                let r = components.iter().map(Polynomial::root_bound).fold(1.0, f64::max) + 1.0;
                Square { corner: Complex64::new(-r, -r), side: 2.0 * r }
            }
            CurveRep::LatticeSum(l) => {
                let half = (l.half_width() as f64 + 0.5) * l.period();
                Square { corner: -l.offset() - Complex64::new(half, half), side: 2.0 * half }
            }
            CurveRep::Translated { inner, shift } => inner.carrier().translated(-shift),
            CurveRep::Rescaled { inner, factor } => inner.carrier().scaled(1.0 / factor),
            CurveRep::Glued(g) => {
                let around = Square { corner: g.center() - Complex64::new(2.0, 2.0), side: 4.0 };
                g.inner().carrier().union(&around)
            }
        }
    }

    /// A bound on `sup |df|` over a square, when the representation admits
    /// an analytic one.
    pub fn derivative_bound(&self, square: &Square) -> Option<f64> {
        match self {
            CurveRep::Constant(_) => Some(0.0),
            CurveRep::LatticeSum(l) => l.derivative_bound(square),
            CurveRep::Translated { inner, shift } => inner.derivative_bound(&square.translated(*shift)),
            CurveRep::Rescaled { inner, factor } => {
                inner.derivative_bound(&square.scaled(*factor)).map(|b| b * factor)
            }
            CurveRep::Rational(_) | CurveRep::Glued(_) => None,
        }
    }
}

fn rational_jet(components: &[Polynomial], z: Complex64) -> Jet {
    let mut value = Vec::with_capacity(components.len());
    let mut deriv = Vec::with_capacity(components.len());
    let mut scale: f64 = 0.0;
    let r = z.norm().max(1.0);
    for p in components {
        let (v, d) = p.eval_with_derivative(z);
        value.push(v);
        deriv.push(d);
        let s = p.coeffs().iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
        scale = scale.max(s);
    }
    let vmax = value.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if vmax > 1e-12 * scale {
        return Jet { value, deriv };
    }
    // Common zero: divide out the lowest vanishing order.
    let taylor: Vec<Vec<Complex64>> = components.iter().map(|p| p.taylor_at(z)).collect();
    let order = taylor.iter().map(Vec::len).max().unwrap_or(1);
    for k in 0..order {
        let at = |t: &Vec<Complex64>, i: usize| t.get(i).copied().unwrap_or_default();
        let lead: Vec<Complex64> = taylor.iter().map(|t| at(t, k)).collect();
        if lead.iter().map(|c| c.norm()).fold(0.0, f64::max) > 1e-12 * scale {
            let next = taylor.iter().map(|t| at(t, k + 1)).collect();
            return Jet { value: lead, deriv: next };
        }
    }
    Jet { value, deriv }
}

/// `f(z)`.
pub fn evaluate(curve: &CurveRep, z: Complex64) -> ProjectivePoint {
    curve.jet(z).point()
}

/// The spherical derivative `|df|(z)`.
pub fn local_lipschitz(curve: &CurveRep, z: Complex64) -> f64 {
    curve.jet(z).lipschitz()
}

/// `z ↦ f(z + a)`.
pub fn translate(curve: &CurveRep, a: Complex64) -> CurveRep {
    if a == Complex64::new(0.0, 0.0) {
        return curve.clone();
    }
    CurveRep::Translated { inner: Box::new(curve.clone()), shift: a }
}

/// `z ↦ g(λz)`.
pub fn rescale(curve: &CurveRep, factor: f64) -> Result<CurveRep> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::InvalidParameter(format!("rescale factor must be positive, got {factor}")));
    }
    if factor == 1.0 {
        return Ok(curve.clone());
    }
    Ok(CurveRep::Rescaled { inner: Box::new(curve.clone()), factor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::fs_distance;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly(coeffs: &[(f64, f64)]) -> Polynomial {
        Polynomial::new(coeffs.iter().map(|&(a, b)| c(a, b)).collect())
    }

    #[test]
    fn line_evaluates_by_substitution() {
        let p = evaluate(&CurveRep::line(), c(2.0, 1.0));
        let want = ProjectivePoint::new(vec![c(1.0, 0.0), c(2.0, 1.0)]).unwrap();
        assert!(fs_distance(&p, &want) < 1e-15);
    }

    #[test]
    fn line_derivative_matches_laplacian_of_potential() {
        // |df|² = (1/4π)Δ log(1+|z|²), 5-point stencil.
        let h = 1e-4;
        let u = |x: f64, y: f64| (1.0 + x * x + y * y).ln();
        let lap = (u(h, 0.0) + u(-h, 0.0) + u(0.0, h) + u(0.0, -h) - 4.0 * u(0.0, 0.0)) / (h * h);
        let fd = (lap / (4.0 * PI)).sqrt();
        let got = local_lipschitz(&CurveRep::line(), c(0.0, 0.0));
        assert!((got - fd).abs() < 1e-6);
        assert!((got - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_matches_laplacian_for_a_cubic() {
        let f = CurveRep::rational(vec![poly(&[(1.0, 0.0), (0.0, 0.5)]), poly(&[(0.2, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)])]).unwrap();
        let z0 = c(0.3, -0.6);
        let h = 1e-4;
        let u = |z: Complex64| {
            let j = f.jet(z);
            j.value.iter().map(|v| v.norm_sqr()).sum::<f64>().ln()
        };
        let lap = (u(z0 + h) + u(z0 - h) + u(z0 + c(0.0, h)) + u(z0 - c(0.0, h)) - 4.0 * u(z0)) / (h * h);
        let fd = (lap / (4.0 * PI)).sqrt();
        assert!((local_lipschitz(&f, z0) - fd).abs() < 1e-5);
    }

    #[test]
    fn common_zero_is_divided_out() {
        // [z : z²] is [1 : z].
        let f = CurveRep::rational(vec![poly(&[(0.0, 0.0), (1.0, 0.0)]), poly(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)])])
            .unwrap();
        let p = evaluate(&f, c(0.0, 0.0));
        assert!(fs_distance(&p, &ProjectivePoint::origin(1)) < 1e-15);
        assert!((local_lipschitz(&f, c(0.0, 0.0)) - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_has_zero_derivative() {
        let q = ProjectivePoint::new(vec![c(1.0, 0.0), c(0.3, 0.2)]).unwrap();
        let f = CurveRep::Constant(q.clone());
        assert_eq!(local_lipschitz(&f, c(5.0, 3.0)), 0.0);
        assert_eq!(evaluate(&f, c(-1.0, 0.0)), q);
    }

    #[test]
    fn rescale_rejects_nonpositive_factor() {
        assert!(rescale(&CurveRep::line(), 0.0).is_err());
        assert!(rescale(&CurveRep::line(), -2.0).is_err());
    }

    #[test]
    fn rescaled_line_chain_rule() {
        let g = CurveRep::line();
        let f = rescale(&g, 0.5).unwrap();
        let z = c(1.5, -0.25);
        assert!((local_lipschitz(&f, z) - 0.5 * local_lipschitz(&g, z * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn lattice_pole_evaluates_to_infinity() {
        let l = LatticeSum::periodic(100.0, c(2.0, 0.0)).unwrap();
        let f = CurveRep::LatticeSum(l);
        let at_pole = evaluate(&f, c(0.0, 0.0));
        let inf = ProjectivePoint::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(fs_distance(&at_pole, &inf) < 1e-15);
        // Approach along a ray: d_FS ≈ |z|³/(√π·2).
        let near = evaluate(&f, c(1e-6, 0.0));
        assert!(fs_distance(&near, &inf) < 1e-15);
        let near = evaluate(&f, c(1e-2, 0.0));
        let want = FS_SCALE * (1e-6f64 / 2.0).atan();
        assert!((fs_distance(&near, &inf) - want).abs() < 1e-12);
    }

    #[test]
    fn square_geometry() {
        let s = Square::new(c(0.0, 0.0), 2.0).unwrap();
        assert!(s.contains(c(1.0, 2.0)));
        assert!(!s.contains(c(2.1, 0.0)));
        assert_eq!(s.distance_to(c(5.0, 6.0)), 5.0);
        assert_eq!(s.center(), c(1.0, 1.0));
        assert!(Square::new(c(0.0, 0.0), 0.0).is_err());
    }
}
