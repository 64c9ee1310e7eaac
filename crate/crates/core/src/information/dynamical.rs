//! Per-area rate estimates for samplers with an explicit parameter process.

use serde::{Deserialize, Serialize};

use super::ba::{validate_ladder, BaConfig, RdEstimate};
use super::grid::{disk_source, grid_rate_at_distortion, GridMetric};
use crate::curves::Square;
use crate::error::{Error, Result};
use crate::measures::MeasureSampler;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    /// Grid cells per `ε` along each axis of the coefficient disk.
    pub cells_per_epsilon: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for QuantizerSpec {
    fn default() -> Self {
        Self { cells_per_epsilon: 1.0, tolerance: 1e-10, max_iterations: 10_000 }
    }
}

impl QuantizerSpec {
    fn validate(&self) -> Result<BaConfig> {
        if !(self.cells_per_epsilon >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantiser needs at least one cell per ε, got {}",
                self.cells_per_epsilon
            )));
        }
        Ok(BaConfig { tolerance: self.tolerance, max_iterations: self.max_iterations })
    }
}

pub const PRODUCT_ASSUMPTION: &str =
    "lattice family: one i.i.d. disk-uniform coefficient per cell of area L², coded independently under Euclidean distortion";
pub const OFFSET_ASSUMPTION: &str = "the cell offset carries finitely many parameters and adds nothing per unit area as the window grows";
pub const PROXY_ASSUMPTION: &str = "coefficient-space distortion stands in for the curve-space metric";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicalRdReport {
    pub epsilon: f64,
    /// Achieved per-parameter distortion.
    pub distortion: f64,
    pub window_area: f64,
    /// Expected number of lattice points in the window.
    pub parameters_in_window: f64,
    /// Bits per coefficient.
    pub rate_per_parameter: f64,
    /// `R(ε, A)/m(A)` in bits.
    pub rate_per_area: f64,
    pub converged: bool,
    pub assumptions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicalRdLadder {
    pub reports: Vec<DynamicalRdReport>,
    /// Per-area rates against `log₂(1/ε)`; the slope is the rate-dimension
    /// proxy.
    pub estimate: RdEstimate,
}

/// Per-area density of independent disk coefficients, or `None` for a
/// measure whose per-area rate vanishes.
fn coefficient_density(sampler: &MeasureSampler) -> Result<Option<f64>> {
    match sampler {
        MeasureSampler::LatticeFamily(p) => Ok(Some(1.0 / (p.period * p.period))),
        MeasureSampler::Rescaled { base, factor } => Ok(coefficient_density(base)?.map(|d| d * factor * factor)),
        MeasureSampler::PeriodicOrbit { .. } => Ok(None),
        MeasureSampler::TranslatedAverage { .. } => Err(Error::UnsupportedMeasure(
            "translated averages have no explicit parameter process".into(),
        )),
    }
}

/// `R(ε, A)/m(A)` from the product structure of the generating parameters:
/// the expected number of coefficients in `A` times the rate of one
/// quantised disk coefficient, over the area.
pub fn dynamical_rd_estimate(
    sampler: &MeasureSampler,
    window: Square,
    epsilon: f64,
    quantizer: &QuantizerSpec,
) -> Result<DynamicalRdReport> {
    let cfg = quantizer.validate()?;
    let area = window.side * window.side;
    if !(area > 0.0) || !area.is_finite() {
        return Err(Error::InvalidParameter("window must have positive area".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("distortion level must be positive, got {epsilon}")));
    }
    let mut assumptions = vec![OFFSET_ASSUMPTION.to_string(), PROXY_ASSUMPTION.to_string()];
    let Some(density) = coefficient_density(sampler)? else {
        assumptions.push(ORBIT_ASSUMPTION.to_string());
        return Ok(DynamicalRdReport {
            epsilon,
            distortion: 0.0,
            window_area: area,
            parameters_in_window: 0.0,
            rate_per_parameter: 0.0,
            rate_per_area: 0.0,
            converged: true,
            assumptions,
        });
    };
    assumptions.insert(0, PRODUCT_ASSUMPTION.to_string());
    let point = if epsilon >= DISK_DIAMETER {
        None
    } else {
        let src = disk_source(1.0, epsilon / quantizer.cells_per_epsilon)?;
        Some(grid_rate_at_distortion(&src, GridMetric::Euclidean, epsilon, &cfg)?)
    };
    let (distortion, rate, converged) = point.map_or((epsilon, 0.0, true), |p| (p.distortion, p.rate, p.converged));
    Ok(DynamicalRdReport {
        epsilon,
        distortion,
        window_area: area,
        parameters_in_window: area * density,
        rate_per_parameter: rate,
        rate_per_area: rate * density,
        converged,
        assumptions,
    })
}

/// [`dynamical_rd_estimate`] along a decreasing ladder, with the slope of the
/// per-area rate against `log₂(1/ε)`.
pub fn dynamical_rd_ladder(
    sampler: &MeasureSampler,
    window: Square,
    ladder: &[f64],
    quantizer: &QuantizerSpec,
) -> Result<DynamicalRdLadder> {
    validate_ladder(ladder)?;
    let reports = ladder
        .iter()
        .map(|&e| dynamical_rd_estimate(sampler, window, e, quantizer))
        .collect::<Result<Vec<_>>>()?;
    let points = reports.iter().map(|r| (if r.distortion > 0.0 { r.distortion } else { r.epsilon }, r.rate_per_area)).collect();
    let converged = reports.iter().all(|r| r.converged);
    Ok(DynamicalRdLadder { estimate: RdEstimate::from_points(points, converged)?, reports })
}

const DISK_DIAMETER: f64 = 2.0;
pub const ORBIT_ASSUMPTION: &str = "single translation orbit: deterministic up to a bounded offset";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{CurveRep, LatticeSum};
    use crate::measures::FamilyParams;
    use crate::{Complex64, ProjectivePoint};

    fn window() -> Square {
        Square::new(Complex64::new(0.0, 0.0), 1000.0).unwrap()
    }

    #[test]
    fn delta_measure_has_no_rate() {
        let s = MeasureSampler::periodic_orbit(CurveRep::Constant(ProjectivePoint::origin(1)), 1.0, 0).unwrap();
        let r = dynamical_rd_estimate(&s, window(), 0.1, &QuantizerSpec::default()).unwrap();
        assert_eq!(r.rate_per_area, 0.0);
    }

    #[test]
    fn coarse_distortion_is_free() {
        let s = MeasureSampler::lattice_family(FamilyParams::new(100.0, 2.0, 3, 0).unwrap()).unwrap();
        let r = dynamical_rd_estimate(&s, window(), 2.5, &QuantizerSpec::default()).unwrap();
        assert_eq!(r.rate_per_area, 0.0);
        assert!(r.assumptions.iter().any(|a| a == PRODUCT_ASSUMPTION));
    }

    #[test]
    fn translated_average_is_unsupported() {
        let l = CurveRep::LatticeSum(LatticeSum::periodic(5.0, Complex64::new(2.0, 0.0)).unwrap());
        let base = MeasureSampler::periodic_orbit(l, 5.0, 1).unwrap();
        let s = MeasureSampler::TranslatedAverage { base: Box::new(base), side: 10.0, seed: 2 };
        assert!(matches!(dynamical_rd_estimate(&s, window(), 0.1, &QuantizerSpec::default()), Err(Error::UnsupportedMeasure(_))));
    }

    #[test]
    fn rescaling_multiplies_rate_by_square_factor() {
        let base = MeasureSampler::lattice_family(FamilyParams::new(100.0, 2.0, 3, 0).unwrap()).unwrap();
        let s = MeasureSampler::Rescaled { base: Box::new(base.clone()), factor: 0.5 };
        let q = QuantizerSpec::default();
        let a = dynamical_rd_estimate(&base, window(), 0.125, &q).unwrap();
        let b = dynamical_rd_estimate(&s, window(), 0.125, &q).unwrap();
        assert!(a.rate_per_area > 0.0);
        assert!((b.rate_per_area - 0.25 * a.rate_per_area).abs() < 1e-15);
    }
}
