//! Finite-alphabet information theory and rate-distortion estimates.
//!
//! Rates are in bits throughout; [`to_nats`] converts.

mod ba;
mod dynamical;
mod grid;

pub use ba::{
    blahut_arimoto, blahut_arimoto_with, rate_at_distortion, rd_brute_force, rd_curve, rdim_slope, BaConfig, BaPoint,
    RdEstimate,
};
pub use dynamical::{dynamical_rd_estimate, dynamical_rd_ladder, DynamicalRdLadder, DynamicalRdReport, QuantizerSpec};
pub use grid::{
    disk_source, grid_rate_at_distortion, interval_source, kawabata_dembo_probe, square_source, GridMetric, GridRdPoint,
    GridSource, KawabataDemboReport,
};

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

const SUM_TOL: f64 = 1e-12;

pub fn to_nats(bits: f64) -> f64 {
    bits * std::f64::consts::LN_2
}

fn check_probs(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Validation(format!("{what} is empty")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Validation(format!("{what} has entry {v}")));
    }
    let total = pairwise_sum(values);
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::Validation(format!("{what} sums to {total}")));
    }
    Ok(())
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs, "pmf")?;
        Ok(Self { probs })
    }

    /// Divides by the total; fails on an empty, negative or zero vector.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total = pairwise_sum(&weights);
        if !(total > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation("weights must be nonnegative with positive total".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("uniform pmf needs at least one atom".into()));
        }
        Ok(Self { probs: vec![1.0 / n as f64; n] })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// One probability per line.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let rows = read_matrix(input)?;
        let probs: Vec<f64> = rows.into_iter().flatten().collect();
        Self::new(probs)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_matrix(out, self.probs.chunks(1))
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

fn read_matrix<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(input);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.iter().all(str::is_empty) || record.get(0).is_some_and(|f| f.starts_with('#')) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("bad number {f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn write_matrix<'a, W: Write, I: Iterator<Item = &'a [f64]>>(out: W, rows: I) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
    }
    w.flush()?;
    Ok(())
}

fn rectangular(rows: &[Vec<f64>], what: &str) -> Result<(usize, usize)> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Validation(format!("{what} must be a nonempty rectangular matrix")));
    }
    Ok((r, c))
}

/// Joint law of `(X, Y)` as a row-major `|X| × |Y|` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if rows * cols != probs.len() || rows == 0 || cols == 0 {
            return Err(Error::Validation(format!("joint pmf of shape {rows}×{cols} has {} entries", probs.len())));
        }
        check_probs(&probs, "joint pmf")?;
        Ok(Self { rows, cols, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let (r, c) = rectangular(rows, "joint pmf")?;
        Self::new(r, c, rows.concat())
    }

    /// `P(x, y) = p(x) W(y|x)`.
    pub fn from_channel(input: &Pmf, channel: &Channel) -> Result<Self> {
        if input.len() != channel.inputs() {
            return Err(Error::DimensionMismatch { expected: channel.inputs(), found: input.len() });
        }
        let probs = (0..channel.inputs())
            .flat_map(|x| (0..channel.outputs()).map(move |y| (x, y)))
            .map(|(x, y)| input.probs[x] * channel.get(x, y))
            .collect();
        Ok(Self { rows: channel.inputs(), cols: channel.outputs(), probs })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.cols + y]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.probs.chunks(self.cols).map(pairwise_sum).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.cols).map(|y| pairwise_sum(&(0..self.rows).map(|x| self.get(x, y)).collect::<Vec<_>>())).collect()
    }

    pub fn transpose(&self) -> Self {
        let probs = (0..self.cols).flat_map(|y| (0..self.rows).map(move |x| (x, y))).map(|(x, y)| self.get(x, y)).collect();
        Self { rows: self.cols, cols: self.rows, probs }
    }

    /// Law of `(f(X), g(Y))`.
    pub fn push_forward(&self, f: &[usize], g: &[usize]) -> Result<Self> {
        if f.len() != self.rows || g.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: f.len() });
        }
        let rows = f.iter().max().map_or(0, |m| m + 1);
        let cols = g.iter().max().map_or(0, |m| m + 1);
        let mut probs = vec![0.0; rows * cols];
        for x in 0..self.rows {
            for y in 0..self.cols {
                probs[f[x] * cols + g[y]] += self.get(x, y);
            }
        }
        Ok(Self { rows, cols, probs })
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        Self::from_rows(&read_matrix(input)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_matrix(out, self.probs.chunks(self.cols))
    }
}

/// Row-stochastic transition matrix `W(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    inputs: usize,
    outputs: usize,
    probs: Vec<f64>,
}

impl Channel {
    pub fn new(inputs: usize, outputs: usize, probs: Vec<f64>) -> Result<Self> {
        if inputs * outputs != probs.len() || inputs == 0 || outputs == 0 {
            return Err(Error::Validation(format!("channel of shape {inputs}×{outputs} has {} entries", probs.len())));
        }
        for row in probs.chunks(outputs) {
            check_probs(row, "channel row")?;
        }
        Ok(Self { inputs, outputs, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let (r, c) = rectangular(rows, "channel")?;
        Self::new(r, c, rows.concat())
    }

    /// Conditional law of `Y` given `X`; rows of zero-probability atoms are
    /// uniform.
    pub fn conditional(joint: &JointPmf) -> Self {
        let (r, c) = joint.shape();
        let px = joint.marginal_x();
        let probs = (0..r)
            .flat_map(|x| {
                let p = px[x];
                (0..c).map(move |y| if p > 0.0 { joint.get(x, y) / p } else { 1.0 / c as f64 })
            })
            .collect();
        Self { inputs: r, outputs: c, probs }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.outputs + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.outputs..(x + 1) * self.outputs]
    }

    /// `Σ wᵢ Wᵢ`; weights must form a pmf.
    pub fn mixture(channels: &[Channel], weights: &Pmf) -> Result<Self> {
        let first = channels.first().ok_or_else(|| Error::Validation("empty mixture".into()))?;
        if channels.len() != weights.len() || channels.iter().any(|c| c.inputs != first.inputs || c.outputs != first.outputs) {
            return Err(Error::Validation("mixture components must share a shape".into()));
        }
        let mut probs = vec![0.0; first.probs.len()];
        for (c, w) in channels.iter().zip(weights.probs()) {
            for (p, q) in probs.iter_mut().zip(&c.probs) {
                *p += w * q;
            }
        }
        Ok(Self { inputs: first.inputs, outputs: first.outputs, probs })
    }
}

/// Nonnegative finite cost matrix `d(x, ŷ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DistortionMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows * cols != values.len() || rows == 0 || cols == 0 {
            return Err(Error::Validation(format!("distortion of shape {rows}×{cols} has {} entries", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!("distortion has entry {v}")));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let (r, c) = rectangular(rows, "distortion")?;
        Self::new(r, c, rows.concat())
    }

    /// `0` on the diagonal, `1` elsewhere.
    pub fn hamming(n: usize) -> Result<Self> {
        Self::new(n, n, (0..n * n).map(|k| if k / n == k % n { 0.0 } else { 1.0 }).collect())
    }

    /// `d(i, j) = |xᵢ − yⱼ|`.
    pub fn absolute(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Self::new(xs.len(), ys.len(), xs.iter().flat_map(|x| ys.iter().map(move |y| (x - y).abs())).collect())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.cols + y]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        Self::from_rows(&read_matrix(input)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_matrix(out, self.values.chunks(self.cols))
    }
}

/// Shannon entropy in bits.
pub fn entropy(p: &Pmf) -> f64 {
    pairwise_sum(&p.probs.iter().map(|&q| plogp(q)).collect::<Vec<_>>())
}

fn entropy_raw(p: &[f64]) -> f64 {
    pairwise_sum(&p.iter().map(|&q| plogp(q)).collect::<Vec<_>>())
}

/// `I(X;Y) = Σ P(x,y) log(P(x,y)/(P(x)P(y)))` in bits, clamped at zero.
pub fn mutual_information(j: &JointPmf) -> f64 {
    let px = j.marginal_x();
    let py = j.marginal_y();
    let terms: Vec<f64> = (0..j.rows)
        .flat_map(|x| (0..j.cols).map(move |y| (x, y)))
        .map(|(x, y)| {
            let p = j.get(x, y);
            if p > 0.0 {
                p * (p.log2() - px[x].log2() - py[y].log2())
            } else {
                0.0
            }
        })
        .collect();
    pairwise_sum(&terms).max(0.0)
}

/// `H(X) + H(Y) − H(X,Y)`, the textbook identity, kept as a cross-check.
pub fn mutual_information_by_entropies(j: &JointPmf) -> f64 {
    entropy_raw(&j.marginal_x()) + entropy_raw(&j.marginal_y()) - entropy_raw(&j.probs)
}

/// `I(μ, ν)` for input law `μ` and channel `ν`.
pub fn channel_information(input: &Pmf, channel: &Channel) -> Result<f64> {
    Ok(mutual_information(&JointPmf::from_channel(input, channel)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&Pmf::new(vec![1.0, 0.0]).unwrap()), 0.0);
        assert!((entropy(&Pmf::new(vec![0.5, 0.5]).unwrap()) - 1.0).abs() < 1e-15);
        let h = entropy(&Pmf::new(vec![0.25, 0.75]).unwrap());
        let oracle = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln()) / 2f64.ln();
        assert!((h - oracle).abs() < 1e-15);
        assert!((h - 0.8113).abs() < 1e-4);
        assert!((to_nats(1.0) - 2f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn invalid_pmfs() {
        assert!(Pmf::new(vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![1.5, -0.5]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        assert!(JointPmf::new(2, 2, vec![0.5, 0.5, 0.0]).is_err());
    }

    #[test]
    fn information_examples() {
        let indep = JointPmf::from_rows(&[vec![0.12, 0.28], vec![0.18, 0.42]]).unwrap();
        assert!(mutual_information(&indep) < 1e-15);
        let copy = JointPmf::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((mutual_information(&copy) - 1.0).abs() < 1e-15);
        let j = JointPmf::from_rows(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        let oracle = 2.0 * 0.4 * (0.4f64 / 0.25).log2() + 2.0 * 0.1 * (0.1f64 / 0.25).log2();
        assert!((mutual_information(&j) - oracle).abs() < 1e-15);
        assert!((mutual_information(&j) - 0.2781).abs() < 1e-4);
        assert!((mutual_information_by_entropies(&j) - oracle).abs() < 1e-14);
    }

    #[test]
    fn conditional_rows_of_null_atoms_are_uniform() {
        let j = JointPmf::from_rows(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let c = Channel::conditional(&j);
        assert_eq!(c.row(1), &[1.0 / 3.0; 3]);
        assert_eq!(c.row(0), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn csv_round_trip() {
        let j = JointPmf::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let mut buf = Vec::new();
        j.write_csv(&mut buf).unwrap();
        assert_eq!(JointPmf::read_csv(buf.as_slice()).unwrap(), j);
        let d = DistortionMatrix::read_csv("# costs\n0, 1\n1, 0\n".as_bytes()).unwrap();
        assert_eq!(d, DistortionMatrix::hamming(2).unwrap());
        let p = Pmf::read_csv("0.25\n0.75\n".as_bytes()).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.75]);
        assert!(DistortionMatrix::read_csv("0,1\n1\n".as_bytes()).is_err());
        assert!(DistortionMatrix::read_csv("0,-1\n".as_bytes()).is_err());
    }

    #[test]
    fn push_forward_sums_cells() {
        let j = JointPmf::from_rows(&[vec![0.1, 0.2, 0.1], vec![0.3, 0.2, 0.1]]).unwrap();
        let k = j.push_forward(&[0, 0], &[0, 1, 1]).unwrap();
        assert_eq!(k.shape(), (1, 2));
        assert!((k.get(0, 0) - 0.4).abs() < 1e-15 && (k.get(0, 1) - 0.6).abs() < 1e-15);
    }
}
