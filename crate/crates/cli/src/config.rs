//! Flat `key = value` experiment configs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use brodylab::Complex64;
use serde::ser::{Serialize, SerializeSeq, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown parameter `{key}` for experiment `{experiment}`")]
    UnknownKey { key: String, experiment: String },
    #[error("parameter `{key}`: expected {expected}, got {found:?}")]
    Type { key: String, expected: &'static str, found: String },
    #[error("parameter `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("cannot read config {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Real,
    Complex,
    Str,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Int => "an integer",
            Kind::Real => "a real number",
            Kind::Complex => "a complex number",
            Kind::Str => "a string",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Complex(Complex64),
    Str(String),
}

impl Value {
    /// Reads a literal without a target type: integers, reals, complex
    /// numbers written `a+bi`, `bi` or `i`, then quoted or bare strings.
    pub fn parse(text: &str) -> Value {
        let t = text.trim();
        if let Some(s) = t.strip_prefix('"').and_then(|s| s.strip_suffix('"')) {
            return Value::Str(s.to_string());
        }
        if let Ok(i) = t.parse::<i64>() {
            return Value::Int(i);
        }
        if let Ok(x) = t.parse::<f64>() {
            return Value::Real(x);
        }
        if let Some(z) = parse_complex(t) {
            return Value::Complex(z);
        }
        Value::Str(t.to_string())
    }

    fn coerce(&self, key: &str, kind: Kind) -> Result<Value, ConfigError> {
        let err = || ConfigError::Type { key: key.to_string(), expected: kind.name(), found: self.to_string() };
        Ok(match (kind, self) {
            (Kind::Int, Value::Int(_)) | (Kind::Real, Value::Real(_)) | (Kind::Complex, Value::Complex(_)) => self.clone(),
            (Kind::Real, Value::Int(i)) => Value::Real(*i as f64),
            (Kind::Complex, Value::Int(i)) => Value::Complex(Complex64::new(*i as f64, 0.0)),
            (Kind::Complex, Value::Real(x)) => Value::Complex(Complex64::new(*x, 0.0)),
            (Kind::Str, Value::Str(_)) => self.clone(),
            (Kind::Str, _) => Value::Str(self.to_string()),
            _ => return Err(err()),
        })
    }
}

fn parse_complex(t: &str) -> Option<Complex64> {
    let body = t.strip_suffix('i')?.replace(' ', "");
    // Split at the last sign that is not an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| {
        (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E')
    });
    let imag = |s: &str| match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => s.parse::<f64>().ok(),
    };
    match split {
        Some(k) => Some(Complex64::new(body[..k].parse().ok()?, imag(&body[k..])?)),
        None => Some(Complex64::new(0.0, imag(&body)?)),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(x) => write!(f, "{x:?}"),
            Value::Complex(z) => write!(f, "{:?}{:+?}i", z.re, z.im),
            Value::Str(s) => write!(f, "{s}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(i) => s.serialize_i64(*i),
            Value::Real(x) => s.serialize_f64(*x),
            Value::Complex(z) => {
                let mut seq = s.serialize_seq(Some(2))?;
                seq.serialize_element(&z.re)?;
                seq.serialize_element(&z.im)?;
                seq.end()
            }
            Value::Str(v) => s.serialize_str(v),
        }
    }
}

/// Raw entries of a config file, in key order.
pub fn parse_text(text: &str) -> Result<BTreeMap<String, Value>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .filter(|(k, v)| !k.is_empty() && !v.is_empty() && !k.contains(char::is_whitespace))
            .ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.to_string() })?;
        if out.insert(key.to_string(), Value::parse(value)).is_some() {
            return Err(ConfigError::Duplicate { line: i + 1, key: key.to_string() });
        }
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (k, ch) in line.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..k],
            _ => {}
        }
    }
    line
}

pub fn read_file(path: &Path) -> Result<BTreeMap<String, Value>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    parse_text(&text)
}

/// A parameter an experiment understands, with its default.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: Value,
    pub help: &'static str,
}

pub fn int(key: &'static str, default: i64, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: Kind::Int, default: Value::Int(default), help }
}

pub fn real(key: &'static str, default: f64, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: Kind::Real, default: Value::Real(default), help }
}

pub fn complex(key: &'static str, default: Complex64, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: Kind::Complex, default: Value::Complex(default), help }
}

pub fn string(key: &'static str, default: &str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: Kind::Str, default: Value::Str(default.to_string()), help }
}

/// Keys that belong to the run rather than to an experiment.
pub const SEED_KEY: &str = "seed";
pub const OUTPUT_KEY: &str = "output_dir";

/// A fully resolved configuration: every declared parameter present with
/// its declared type.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub output_dir: std::path::PathBuf,
}

impl ExperimentConfig {
    pub fn resolve(
        name: &str,
        schema: &[ParamSpec],
        mut raw: BTreeMap<String, Value>,
        seed: Option<u64>,
        output_dir: Option<std::path::PathBuf>,
    ) -> Result<Self, ConfigError> {
        let file_seed = match raw.remove(SEED_KEY) {
            Some(Value::Int(s)) if s >= 0 => Some(s as u64),
            Some(v) => {
                return Err(ConfigError::Type { key: SEED_KEY.into(), expected: "a nonnegative integer", found: v.to_string() })
            }
            None => None,
        };
        let file_out = raw.remove(OUTPUT_KEY).map(|v| std::path::PathBuf::from(v.to_string()));
        if let Some(key) = raw.keys().find(|k| !schema.iter().any(|p| p.key == k.as_str())) {
            return Err(ConfigError::UnknownKey { key: key.clone(), experiment: name.to_string() });
        }
        let mut params = BTreeMap::new();
        for p in schema {
            let value = match raw.remove(p.key) {
                Some(v) => v.coerce(p.key, p.kind)?,
                None => p.default.clone(),
            };
            params.insert(p.key.to_string(), value);
        }
        Ok(Self {
            name: name.to_string(),
            params,
            seed: seed.or(file_seed).unwrap_or(0),
            output_dir: output_dir.or(file_out).unwrap_or_else(|| std::path::PathBuf::from("brodylab-out")),
        })
    }

    fn get(&self, key: &str) -> &Value {
        self.params.get(key).unwrap_or_else(|| panic!("parameter `{key}` missing from schema"))
    }

    pub fn int(&self, key: &str) -> i64 {
        match self.get(key) {
            Value::Int(i) => *i,
            v => panic!("parameter `{key}` is not an integer: {v}"),
        }
    }

    /// A nonnegative integer parameter as a count.
    pub fn count(&self, key: &str) -> Result<usize, ConfigError> {
        usize::try_from(self.int(key)).map_err(|_| ConfigError::Invalid { key: key.into(), reason: "must be nonnegative".into() })
    }

    pub fn real(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Real(x) => *x,
            v => panic!("parameter `{key}` is not real: {v}"),
        }
    }

    pub fn complex(&self, key: &str) -> Complex64 {
        match self.get(key) {
            Value::Complex(z) => *z,
            v => panic!("parameter `{key}` is not complex: {v}"),
        }
    }

    pub fn string(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Str(s) => s,
            v => panic!("parameter `{key}` is not a string: {v}"),
        }
    }

    /// A comma-separated list of reals held in a string parameter.
    pub fn reals(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let list: Result<Vec<f64>, _> = self.string(key).split(',').map(|s| s.trim().parse::<f64>()).collect();
        match list {
            Ok(v) if !v.is_empty() => Ok(v),
            _ => Err(ConfigError::Invalid { key: key.into(), reason: "expected a comma-separated list of numbers".into() }),
        }
    }

    pub fn choice<'a>(&'a self, key: &str, options: &[&str]) -> Result<&'a str, ConfigError> {
        let s = self.string(key);
        if options.contains(&s) {
            Ok(s)
        } else {
            Err(ConfigError::Invalid { key: key.into(), reason: format!("expected one of {options:?}, got {s:?}") })
        }
    }
}
