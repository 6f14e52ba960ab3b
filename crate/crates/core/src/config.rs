//! Experiment configuration.
//!
//! A config is a flat document of `key = value` lines (`#` starts a comment)
//! or a flat JSON object. Numbers are kept as their decimal text and parsed
//! with [`parse_real`], so `1/3` and `inf` are accepted. The hash is the
//! SHA-256 of the canonical `key=value` listing of the effective config,
//! defaults included.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exponents::{parse_real, ArExponents, ExponentTuple};
use crate::grid::GridSpec;
use crate::synth::FunctionSpec;

/// Known keys with their defaults; `None` means "derived when absent".
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("grid", Some("n=1,L=8")),
    ("weight", Some("power:a=0.3")),
    ("input", Some("random:seed=1")),
    ("p0", Some("1")),
    ("q0", Some("inf")),
    ("p", Some("2")),
    ("q", None),
    ("alpha", None),
    ("s", Some("2")),
    ("eta", None),
    ("rho", Some("2")),
    ("lambda", None),
    ("seed", Some("0")),
    ("trials", Some("100")),
    ("family", Some("power:a=0..0.9:10")),
    ("iterations", Some("500")),
    ("step", Some("0.5")),
    ("tol", Some("0.05")),
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn new() -> Self {
        RawConfig::default()
    }

    /// Parses either a JSON object or `key = value` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::new();
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| Error::Parse(format!("config JSON: {e}")))?;
            let obj = value.as_object().ok_or_else(|| Error::Parse("config JSON must be an object".into()))?;
            for (k, v) in obj {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => n.to_string(),
                    other => return Err(Error::Parse(format!("config key `{k}`: unsupported value {other}"))),
                };
                raw.set(k, &s)?;
            }
        } else {
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", i + 1)))?;
                raw.set(k.trim(), v.trim())?;
            }
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Parse(format!("unknown config key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str).or_else(|| {
            KEYS.iter().find(|(k, _)| *k == key).and_then(|(_, d)| *d)
        })
    }

    /// `key=value` lines of the effective config, sorted by key.
    pub fn canonical(&self) -> String {
        let mut keys: Vec<&str> = KEYS.iter().map(|(k, _)| *k).collect();
        keys.sort_unstable();
        let mut out = String::new();
        for k in keys {
            if let Some(v) = self.get(k) {
                writeln!(out, "{k}={v}").expect("writing to a String");
            }
        }
        out
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

/// Typed view of a [`RawConfig`].
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub raw: RawConfig,
    pub grid: GridSpec,
    pub weight: FunctionSpec,
    pub input: FunctionSpec,
    pub p0: f64,
    pub q0: f64,
    pub p: f64,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub s: f64,
    pub eta: Option<f64>,
    pub rho: f64,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub trials: usize,
    pub family: String,
    pub iterations: usize,
    pub step: f64,
    pub tol: f64,
}

impl Config {
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let real = |k: &str| -> Result<f64> {
            parse_real(raw.get(k).expect("key has a default")).map_err(|e| Error::Parse(format!("{k}: {e}")))
        };
        let opt_real = |k: &str| raw.get(k).map(parse_real).transpose();
        let int = |k: &str| -> Result<u64> {
            let v = raw.get(k).expect("key has a default");
            v.parse().map_err(|_| Error::Parse(format!("{k} = `{v}` is not a non-negative integer")))
        };
        Ok(Config {
            grid: raw.get("grid").expect("default").parse()?,
            weight: raw.get("weight").expect("default").parse()?,
            input: raw.get("input").expect("default").parse()?,
            p0: real("p0")?,
            q0: real("q0")?,
            p: real("p")?,
            q: opt_real("q")?,
            alpha: opt_real("alpha")?,
            s: real("s")?,
            eta: opt_real("eta")?,
            rho: real("rho")?,
            lambda: opt_real("lambda")?,
            seed: int("seed")?,
            trials: int("trials")? as usize,
            family: raw.get("family").expect("default").to_string(),
            iterations: int("iterations")? as usize,
            step: real("step")?,
            tol: real("tol")?,
            raw,
        })
    }

    pub fn hash(&self) -> String {
        self.raw.hash()
    }

    /// The exponent tuple: `q` when given, otherwise solved from `α`
    /// (default 0).
    pub fn exponents(&self) -> Result<ExponentTuple> {
        let n = self.grid.dim;
        match (self.q, self.alpha) {
            (Some(q), None) => ExponentTuple::with_q(n, self.p0, self.q0, self.p, q),
            (Some(q), Some(a)) => ExponentTuple::new(n, self.p0, self.q0, self.p, q, a),
            (None, a) => ExponentTuple::with_alpha(n, self.p0, self.q0, self.p, a.unwrap_or(0.0)),
        }
    }

    /// `(p, q, α)` with `1/p − 1/q = α/n`: `α` is solved from `q` when `q`
    /// is given, otherwise `α` (default 0) determines `q`.
    pub fn ar_exponents(&self) -> Result<ArExponents> {
        let n = self.grid.dim as f64;
        let (q, alpha) = match (self.q, self.alpha) {
            (Some(q), Some(a)) => (q, a),
            (Some(q), None) => (q, n * (1.0 / self.p - 1.0 / q)),
            (None, a) => {
                let a = a.unwrap_or(0.0);
                (1.0 / (1.0 / self.p - a / n), a)
            }
        };
        let e = ArExponents::new(self.p, q, alpha);
        e.validate(self.grid.dim)?;
        Ok(e)
    }

    /// The declared sparseness: `eta` if set, else `1 − ρ^{-p0}`, the
    /// guaranteed sparseness of stopping families.
    pub fn sparse_eta(&self) -> f64 {
        self.eta.unwrap_or(1.0 - self.rho.powf(-self.p0))
    }
}

/// A one-parameter weight family `power:a=<lo>..<hi>:<count>`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl FamilySpec {
    pub fn parse(s: &str) -> Result<Self> {
        let body = s
            .trim()
            .strip_prefix("power:a=")
            .ok_or_else(|| Error::Parse(format!("family `{s}` must look like power:a=<lo>..<hi>:<count>")))?;
        let (range, count) = body
            .rsplit_once(':')
            .ok_or_else(|| Error::Parse(format!("family `{s}` lacks :<count>")))?;
        let (lo, hi) = range.split_once("..").ok_or_else(|| Error::Parse(format!("family `{s}` lacks lo..hi")))?;
        let count: usize = count.trim().parse().map_err(|_| Error::Parse(format!("family count `{count}`")))?;
        let (lo, hi) = (parse_real(lo)?, parse_real(hi)?);
        if count < 2 || lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Parse(format!("family `{s}` needs lo < hi and at least 2 members")));
        }
        Ok(FamilySpec { lo, hi, count })
    }

    pub fn exponents(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64).collect()
    }

    pub fn members(&self) -> Vec<FunctionSpec> {
        self.exponents().into_iter().map(FunctionSpec::power).collect()
    }
}
