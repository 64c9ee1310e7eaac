//! JSON documents for curves: `{kind, N, …}` with complex numbers as
//! `[re, im]` and lattice coefficients keyed `"m,n"`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{glue_with_amplitude, CurveRep, LatticeSum, Polynomial};
use crate::projective::ProjectivePoint;
use crate::{Error, Result};

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn complex([re, im]: [f64; 2]) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveDoc {
    Constant {
        #[serde(rename = "N")]
        n: usize,
        point: Vec<[f64; 2]>,
    },
    Rational {
        #[serde(rename = "N")]
        n: usize,
        components: Vec<Vec<[f64; 2]>>,
    },
    LatticeSum {
        #[serde(rename = "N")]
        n: usize,
        period: f64,
        offset: [f64; 2],
        background: [f64; 2],
        window_radius: f64,
        coefficients: BTreeMap<String, [f64; 2]>,
    },
    Translated {
        #[serde(rename = "N")]
        n: usize,
        shift: [f64; 2],
        inner: Box<CurveDoc>,
    },
    Rescaled {
        #[serde(rename = "N")]
        n: usize,
        factor: f64,
        inner: Box<CurveDoc>,
    },
    Glued {
        #[serde(rename = "N")]
        n: usize,
        center: [f64; 2],
        target: Vec<[f64; 2]>,
        amplitude: f64,
        inner: Box<CurveDoc>,
    },
}

impl From<CurveRep> for CurveDoc {
    fn from(curve: CurveRep) -> Self {
        let n = curve.dim();
        match curve {
            CurveRep::Constant(p) => CurveDoc::Constant { n, point: p.coords().iter().copied().map(pair).collect() },
            CurveRep::Rational(components) => CurveDoc::Rational {
                n,
                components: components.iter().map(|p| p.coeffs().iter().copied().map(pair).collect()).collect(),
            },
            CurveRep::LatticeSum(l) => {
                let k = l.half_width() as i64;
                let mut coefficients = BTreeMap::new();
                for nn in -k..=k {
                    for m in -k..=k {
                        coefficients.insert(format!("{m},{nn}"), pair(l.coefficient(m, nn)));
                    }
                }
                CurveDoc::LatticeSum {
                    n,
                    period: l.period(),
                    offset: pair(l.offset()),
                    background: pair(l.background()),
                    window_radius: l.window_radius(),
                    coefficients,
                }
            }
            CurveRep::Translated { inner, shift } => {
                CurveDoc::Translated { n, shift: pair(shift), inner: Box::new((*inner).into()) }
            }
            CurveRep::Rescaled { inner, factor } => CurveDoc::Rescaled { n, factor, inner: Box::new((*inner).into()) },
            CurveRep::Glued(g) => CurveDoc::Glued {
                n,
                center: pair(g.center()),
                target: g.target().coords().iter().copied().map(pair).collect(),
                amplitude: g.amplitude(),
                inner: Box::new(g.inner().clone().into()),
            },
        }
    }
}

fn parse_key(key: &str) -> Result<(i64, i64)> {
    let (m, n) = key.split_once(',').ok_or_else(|| Error::Parse(format!("lattice key {key:?} is not \"m,n\"")))?;
    let parse = |s: &str| s.trim().parse::<i64>().map_err(|e| Error::Parse(format!("lattice key {key:?}: {e}")));
    Ok((parse(m)?, parse(n)?))
}

impl TryFrom<CurveDoc> for CurveRep {
    type Error = Error;

    fn try_from(doc: CurveDoc) -> Result<Self> {
        let check_dim = |declared: usize, curve: CurveRep| -> Result<CurveRep> {
            if curve.dim() != declared {
                return Err(Error::DimensionMismatch { expected: declared, found: curve.dim() });
            }
            Ok(curve)
        };
        match doc {
            CurveDoc::Constant { n, point } => {
                check_dim(n, CurveRep::Constant(ProjectivePoint::new(point.into_iter().map(complex).collect())?))
            }
            CurveDoc::Rational { n, components } => check_dim(
                n,
                CurveRep::rational(
                    components
                        .into_iter()
                        .map(|c| Polynomial::new(c.into_iter().map(complex).collect()))
                        .collect(),
                )?,
            ),
            CurveDoc::LatticeSum { n, period, offset, background, window_radius: _, coefficients } => {
                let mut entries = Vec::with_capacity(coefficients.len());
                let mut k = 0i64;
                for (key, value) in &coefficients {
                    let (m, nn) = parse_key(key)?;
                    k = k.max(m.abs()).max(nn.abs());
                    entries.push((m, nn, complex(*value)));
                }
                let side = 2 * k + 1;
                let background = complex(background);
                let mut window = vec![background; (side * side) as usize];
                for (m, nn, v) in entries {
                    window[((nn + k) * side + (m + k)) as usize] = v;
                }
                let l = LatticeSum::new(period, complex(offset), background, k as usize, window)?;
                check_dim(n, CurveRep::LatticeSum(l))
            }
            CurveDoc::Translated { n, shift, inner } => {
                let inner: CurveRep = (*inner).try_into()?;
                check_dim(n, CurveRep::Translated { inner: Box::new(inner), shift: complex(shift) })
            }
            CurveDoc::Rescaled { n, factor, inner } => {
                let inner: CurveRep = (*inner).try_into()?;
                if !(factor > 0.0) || !factor.is_finite() {
                    return Err(Error::InvalidParameter(format!("rescale factor must be positive, got {factor}")));
                }
                check_dim(n, CurveRep::Rescaled { inner: Box::new(inner), factor })
            }
            CurveDoc::Glued { n, center, target, amplitude, inner } => {
                let inner: CurveRep = (*inner).try_into()?;
                let q = ProjectivePoint::new(target.into_iter().map(complex).collect())?;
                check_dim(n, glue_with_amplitude(&inner, complex(center), &q, amplitude)?)
            }
        }
    }
}
