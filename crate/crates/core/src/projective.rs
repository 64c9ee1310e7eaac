//! Complex projective space with the Fubini–Study metric, normalised so
//! that a projective line has unit area (diameter `√π/2`).

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{self, tag};
use crate::{Error, Result};

/// `1/√π`, the conversion from the angle between lines in `ℂ^{N+1}` to
/// Fubini–Study length in the unit-area normalisation.
pub const FS_SCALE: f64 = 0.564_189_583_547_756_3;

/// Diameter of `ℂP^N` in the unit-area normalisation.
pub const FS_DIAMETER: f64 = 0.886_226_925_452_758;

/// A point of `ℂP^N`, stored as a unit vector whose largest-modulus
/// coordinate is real and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct ProjectivePoint {
    coords: Vec<Complex64>,
}

impl ProjectivePoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidPoint);
        }
        let (imax, amax) = coords
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(amax > 0.0) || !amax.is_finite() {
            return Err(Error::InvalidPoint);
        }
        if coords[imax].im == 0.0 && coords[imax].re > 0.0 {
            let norm2: f64 = coords.iter().map(|c| c.norm_sqr()).sum();
            if (norm2 - 1.0).abs() <= 4.0 * f64::EPSILON {
                return Ok(Self { coords });
            }
        }
        // Scale by the largest coordinate first so the norm cannot overflow.
        let phase = coords[imax] / amax;
        let scaled: Vec<Complex64> = coords.iter().map(|c| c / (phase * amax)).collect();
        let norm = scaled.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let mut coords: Vec<Complex64> = scaled.into_iter().map(|c| c / norm).collect();
        coords[imax] = Complex64::new(coords[imax].re, 0.0);
        Ok(Self { coords })
    }

    /// `[1 : w₁ : … : w_N]`.
    pub fn from_affine(w: &[Complex64]) -> Result<Self> {
        let mut coords = Vec::with_capacity(w.len() + 1);
        coords.push(Complex64::new(1.0, 0.0));
        coords.extend_from_slice(w);
        Self::new(coords)
    }

    /// The base point `[1 : 0 : … : 0]` of `ℂP^N`.
    pub fn origin(n: usize) -> Self {
        let mut coords = vec![Complex64::new(0.0, 0.0); n + 1];
        coords[0] = Complex64::new(1.0, 0.0);
        Self { coords }
    }

    /// Complex dimension `N`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }
}

impl TryFrom<Vec<[f64; 2]>> for ProjectivePoint {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<ProjectivePoint> for Vec<[f64; 2]> {
    fn from(p: ProjectivePoint) -> Self {
        p.coords.iter().map(|c| [c.re, c.im]).collect()
    }
}

/// Fubini–Study distance between the lines spanned by two nonzero vectors.
///
/// Uses `atan2(sin θ, cos θ)` with `sin θ` from the Lagrange identity, which
/// equals the clamped `arccos(|⟨a,b⟩|/‖a‖‖b‖)` but keeps full relative
/// precision for nearby points.
pub fn fs_distance_raw(a: &[Complex64], b: &[Complex64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut inner = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        inner += x.conj() * y;
    }
    let mut wedge = 0.0;
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            wedge += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
        }
    }
    FS_SCALE * wedge.sqrt().atan2(inner.norm())
}

/// Fubini–Study distance in the unit-area normalisation.
///
/// # Panics
/// If the two points live in projective spaces of different dimension.
pub fn fs_distance(p: &ProjectivePoint, q: &ProjectivePoint) -> f64 {
    assert_eq!(p.dim(), q.dim(), "fs_distance: dimension mismatch");
    fs_distance_raw(&p.coords, &q.coords)
}

/// Unitary map sending a given point to `[1:0:…:0]` and fixing the base
/// point itself: a Householder reflection followed by a phase on `e₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    v: Vec<Complex64>,
    scale: f64,
    phase: Complex64,
}

impl Rotation {
    pub fn to_origin(q: &ProjectivePoint) -> Self {
        let x = q.coords();
        let x0 = x[0];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        // x is unit length; adding avoids cancellation. The reflection sends
        // x to −phase·e₀.
        let mut v = x.to_vec();
        v[0] += phase;
        let vv: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        Self { v, scale: 2.0 / vv, phase: -phase.conj() }
    }

    fn reflect(&self, y: &mut [Complex64]) {
        let mut dot = Complex64::new(0.0, 0.0);
        for (vi, yi) in self.v.iter().zip(y.iter()) {
            dot += vi.conj() * yi;
        }
        let k = dot * self.scale;
        for (yi, vi) in y.iter_mut().zip(&self.v) {
            *yi -= vi * k;
        }
    }

    pub fn apply(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = y.to_vec();
        self.reflect(&mut out);
        out[0] *= self.phase;
        out
    }

    pub fn apply_inverse(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = y.to_vec();
        out[0] *= self.phase.conj();
        self.reflect(&mut out);
        out
    }
}

/// A finite ε-spanning set of `ℂP^N`.
#[derive(Debug, Clone)]
pub struct SpanningSet {
    pub points: Vec<ProjectivePoint>,
    pub epsilon: f64,
    /// The documented bound `(4π)^N · ε^{-2N}` on the size of the set.
    pub size_bound: f64,
}

/// Constant `c` in `|A| ≤ c·(1/ε)^{2N}`: the set built here is
/// `ε/2`-separated, and disjoint balls of radius `ε/4` have volume at least
/// `(ε/(2√π))^{2N}/N!` against a total volume `1/N!`.
pub fn spanning_constant(n: usize) -> f64 {
    (4.0 * std::f64::consts::PI).powi(n as i32)
}

/// Uniform sample from the Fubini–Study measure. For `N = 1` the sample is
/// stratified over equal-area cells of the Riemann sphere.
pub fn fs_uniform_sample(n: usize, count: usize, seed: u64) -> Vec<ProjectivePoint> {
    let mut rng = rng::stream(seed, &[tag::SPANNING, n as u64, count as u64]);
    if n == 1 {
        let side = (count as f64).sqrt().ceil() as usize;
        let mut out = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                let z = -1.0 + 2.0 * (i as f64 + rng.gen::<f64>()) / side as f64;
                let phi = std::f64::consts::TAU * (j as f64 + rng.gen::<f64>()) / side as f64;
                let theta = z.clamp(-1.0, 1.0).acos();
                let c = Complex64::new((theta / 2.0).cos(), 0.0);
                let s = Complex64::from_polar((theta / 2.0).sin(), phi);
                out.push(ProjectivePoint::new(vec![c, s]).expect("nonzero"));
            }
        }
        out
    } else {
        (0..count)
            .map(|_| {
                loop {
                    let v: Vec<Complex64> = (0..=n).map(|_| rng::complex_gaussian(&mut rng)).collect();
                    if let Ok(p) = ProjectivePoint::new(v) {
                        return p;
                    }
                }
            })
            .collect()
    }
}

/// Builds an ε-spanning set by greedy farthest-point insertion over a
/// stratified random sample (ties broken by insertion order).
pub fn fs_spanning_set(n: usize, epsilon: f64, seed: u64) -> Result<SpanningSet> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("spanning radius must be positive, got {epsilon}")));
    }
    let size_bound = spanning_constant(n) * epsilon.powi(-2 * n as i32);
    if epsilon > FS_DIAMETER {
        return Ok(SpanningSet { points: vec![ProjectivePoint::origin(n)], epsilon, size_bound });
    }
    // Dense enough that every point is within ε/4 of the sample with high
    // probability: ball of radius ε/4 has relative volume sin^{2N}(√π ε/4).
    let p = ((std::f64::consts::PI.sqrt() * epsilon / 4.0).min(std::f64::consts::FRAC_PI_2).sin())
        .powi(2 * n as i32);
    let count = ((1.0 / p) * (1e4 / p).ln()).ceil().max(64.0) as usize;
    let sample = fs_uniform_sample(n, count, seed);
    let mut nearest = vec![f64::INFINITY; sample.len()];
    let mut chosen = vec![0usize];
    loop {
        let last = &sample[*chosen.last().unwrap()];
        let mut far = (0usize, -1.0f64);
        for (i, s) in sample.iter().enumerate() {
            let d = fs_distance(last, s);
            if d < nearest[i] {
                nearest[i] = d;
            }
            if nearest[i] > far.1 {
                far = (i, nearest[i]);
            }
        }
        if far.1 <= epsilon / 2.0 {
            break;
        }
        chosen.push(far.0);
    }
    Ok(SpanningSet { points: chosen.into_iter().map(|i| sample[i].clone()).collect(), epsilon, size_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert_eq!(ProjectivePoint::new(vec![c(0.0, 0.0), c(0.0, 0.0)]), Err(Error::InvalidPoint));
    }

    #[test]
    fn known_distances() {
        let p = ProjectivePoint::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let q = ProjectivePoint::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let r = ProjectivePoint::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(fs_distance(&p, &p), 0.0);
        assert!((fs_distance(&p, &q) - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((fs_distance(&p, &r) - std::f64::consts::PI.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn constants_match_closed_forms() {
        assert!((FS_SCALE - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-16);
        assert!((FS_DIAMETER - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn canonical_form_identifies_proportional_vectors() {
        let p = ProjectivePoint::new(vec![c(1.0, 2.0), c(-0.5, 0.25)]).unwrap();
        let k = c(-3.0, 0.7);
        let q = ProjectivePoint::new(p.coords().iter().map(|x| x * k).collect()).unwrap();
        for (a, b) in p.coords().iter().zip(q.coords()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn rotation_sends_point_to_origin() {
        let q = ProjectivePoint::new(vec![c(0.3, -0.2), c(0.1, 0.9), c(-0.4, 0.0)]).unwrap();
        let u = Rotation::to_origin(&q);
        let img = u.apply(q.coords());
        assert!(img[1].norm() < 1e-15 && img[2].norm() < 1e-15);
        assert!((img[0] - c(1.0, 0.0)).norm() < 1e-15);
        let back = u.apply_inverse(&img);
        for (a, b) in back.iter().zip(q.coords()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn rotation_fixes_base_point() {
        let u = Rotation::to_origin(&ProjectivePoint::origin(2));
        let y = vec![c(0.2, 0.1), c(-1.0, 0.5), c(0.0, 3.0)];
        for (a, b) in u.apply(&y).iter().zip(&y) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn spanning_set_rejects_nonpositive_radius() {
        assert!(fs_spanning_set(1, 0.0, 1).is_err());
        assert!(fs_spanning_set(1, -1.0, 1).is_err());
    }

    #[test]
    fn large_radius_needs_one_point() {
        assert_eq!(fs_spanning_set(1, 0.9, 1).unwrap().points.len(), 1);
    }
}
