//! Schema-v1 JSON reports and CSV plot files.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use brodylab::curves::Verdict;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::config::{ExperimentConfig, Value};

pub const SCHEMA: &str = "brodylab-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metric {
    pub value: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictEntry {
    pub status: Verdict,
    /// Key into `metrics`.
    pub metric: String,
    pub criterion: String,
}

#[derive(Debug, Clone, Serialize)]
struct ConfigEcho<'a> {
    seed: u64,
    params: &'a BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema: &'static str,
    pub name: String,
    pub anchor: &'static str,
    #[serde(skip)]
    pub config: ExperimentConfig,
    pub metrics: BTreeMap<String, Metric>,
    pub verdicts: BTreeMap<String, VerdictEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub assumptions: Vec<String>,
    pub runtime_seconds: f64,
    pub artifacts: Vec<String>,
}

impl ExperimentReport {
    pub fn new(config: &ExperimentConfig, anchor: &'static str) -> Self {
        Self {
            schema: SCHEMA,
            name: config.name.clone(),
            anchor,
            config: config.clone(),
            metrics: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            error: None,
            assumptions: Vec::new(),
            runtime_seconds: 0.0,
            artifacts: Vec::new(),
        }
    }

    pub fn metric(&mut self, key: &str, value: f64, uncertainty: f64) {
        self.metrics.insert(key.to_string(), Metric { value, uncertainty });
    }

    pub fn verdict(&mut self, key: &str, metric: &str, status: Verdict, criterion: impl Into<String>) {
        assert!(self.metrics.contains_key(metric), "verdict `{key}` refers to unknown metric `{metric}`");
        self.verdicts
            .insert(key.to_string(), VerdictEntry { status, metric: metric.to_string(), criterion: criterion.into() });
    }

    /// Pass only when every verdict passes; an empty set is inconclusive.
    pub fn overall(&self) -> Verdict {
        if self.verdicts.is_empty() {
            return Verdict::Inconclusive;
        }
        self.verdicts.values().fold(Verdict::Pass, |acc, v| acc.and(v.status))
    }

    /// Records a failure inside the experiment as an inconclusive run.
    pub fn fail_with(&mut self, message: String) {
        self.error = Some(message);
        self.metric("completed", 0.0, 0.0);
        self.verdict("completed", "completed", Verdict::Inconclusive, "experiment ran to completion");
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            #[serde(flatten)]
            report: &'a ExperimentReport,
            config: ConfigEcho<'a>,
            overall: Verdict,
        }
        let doc = Doc {
            report: self,
            config: ConfigEcho { seed: self.config.seed, params: &self.config.params },
            overall: self.overall(),
        };
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, Precise::default());
        doc.serialize(&mut ser).expect("report serialises");
        out.push(b'\n');
        String::from_utf8(out).expect("utf-8 json")
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", self.name));
        std::fs::write(&path, self.to_json())?;
        Ok(path)
    }
}

/// Pretty JSON with every float written to 17 significant digits.
#[derive(Default)]
pub struct Precise(PrettyFormatter<'static>);

pub fn float17(v: f64) -> String {
    format!("{v:.16e}")
}

impl Formatter for Precise {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(float17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Writes `rows` under `header` to `<dir>/<name>-<tag>.csv` and returns the
/// file name.
pub fn write_csv(dir: &Path, name: &str, tag: &str, header: &[&str], rows: &[Vec<f64>]) -> io::Result<String> {
    std::fs::create_dir_all(dir)?;
    let file = format!("{name}-{tag}.csv");
    let mut out = io::BufWriter::new(std::fs::File::create(dir.join(&file))?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| float17(v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig::resolve("demo", &[crate::config::real("x", 0.1, "")], BTreeMap::new(), Some(3), None).unwrap()
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let mut r = ExperimentReport::new(&config(), "anchor");
        r.metric("m", 0.1, f64::NAN);
        r.verdict("v", "m", Verdict::Pass, "always");
        let json = r.to_json();
        assert!(json.contains("1.0000000000000001e-1"), "{json}");
        assert!(json.contains("\"uncertainty\": null"));
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["metrics"]["m"]["value"].as_f64(), Some(0.1));
        assert_eq!(back["config"]["params"]["x"].as_f64(), Some(0.1));
        assert_eq!(back["config"]["seed"], 3);
        assert_eq!(back["overall"], "pass");
        assert_eq!(back["schema"], SCHEMA);
    }

    #[test]
    fn overall_verdict() {
        let mut r = ExperimentReport::new(&config(), "anchor");
        assert_eq!(r.overall(), Verdict::Inconclusive);
        r.metric("m", 1.0, 0.0);
        r.verdict("a", "m", Verdict::Pass, "");
        r.verdict("b", "m", Verdict::Inconclusive, "");
        assert_eq!(r.overall(), Verdict::Inconclusive);
        r.verdict("c", "m", Verdict::Fail, "");
        assert_eq!(r.overall(), Verdict::Fail);
    }

    #[test]
    #[should_panic]
    fn verdict_needs_metric() {
        ExperimentReport::new(&config(), "anchor").verdict("v", "missing", Verdict::Pass, "");
    }
}
