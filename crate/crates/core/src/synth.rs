//! The function mini-language used by configs and the CLI:
//!
//! ```text
//! const:<c>
//! indicator:cells=<i>|<a>..<b>[;...]
//! power:a=<exponent>[,center=<x>[:<y>...]]
//! random:seed=<u64>[,dist=lognormal,sigma=<s>][,dist=uniform,lo=<a>,hi=<b>]
//! ```
//!
//! Power functions `|x - c|^a` are sampled at cell midpoints.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Uniform};

use crate::error::{Error, Result};
use crate::exponents::parse_real;
use crate::function::{CellSet, GridFunction, Weight};
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq)]
pub enum RandomDist {
    LogNormal { sigma: f64 },
    Uniform { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionSpec {
    Const(f64),
    Indicator(Vec<CellRange>),
    Power { exponent: f64, center: Vec<f64> },
    Random { seed: u64, dist: RandomDist },
}

/// Inclusive-exclusive run of cell indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellRange {
    pub start: usize,
    pub end: usize,
}

impl FunctionSpec {
    pub fn power(exponent: f64) -> Self {
        FunctionSpec::Power { exponent, center: Vec::new() }
    }

    pub fn random(seed: u64) -> Self {
        FunctionSpec::Random { seed, dist: RandomDist::LogNormal { sigma: 1.0 } }
    }

    pub fn synthesize(&self, grid: &Grid) -> Result<GridFunction> {
        let cells = grid.cell_count();
        match self {
            FunctionSpec::Const(c) => GridFunction::constant(grid, *c),
            FunctionSpec::Indicator(ranges) => {
                let mut list = Vec::new();
                for r in ranges {
                    if r.end > cells || r.start >= r.end {
                        return Err(Error::Parameter(format!(
                            "cell range {}..{} outside 0..{cells}",
                            r.start, r.end
                        )));
                    }
                    list.extend(r.start..r.end);
                }
                Ok(GridFunction::indicator(grid, &CellSet::new(list)))
            }
            FunctionSpec::Power { exponent, center } => {
                let n = grid.dim();
                if *exponent <= -(n as f64) {
                    return Err(Error::Parameter(format!(
                        "power exponent {exponent} must exceed -n = -{n} for local integrability"
                    )));
                }
                let c = match center.len() {
                    0 => vec![0.0; n],
                    1 => vec![center[0]; n],
                    k if k == n => center.clone(),
                    k => return Err(Error::Parameter(format!("center has {k} coordinates, n = {n}"))),
                };
                let values = (0..cells)
                    .map(|i| {
                        let x = grid.cell_center(i);
                        let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                        r2.sqrt().powf(*exponent)
                    })
                    .collect();
                GridFunction::from_values(grid, values)
            }
            FunctionSpec::Random { seed, dist } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let values = match dist {
                    RandomDist::LogNormal { sigma } => {
                        let d = LogNormal::new(0.0, *sigma)
                            .map_err(|e| Error::Parameter(format!("lognormal sigma: {e}")))?;
                        (0..cells).map(|_| d.sample(&mut rng)).collect()
                    }
                    RandomDist::Uniform { lo, hi } => {
                        let d = Uniform::new(*lo, *hi).map_err(|e| Error::Parameter(format!("uniform: {e}")))?;
                        (0..cells).map(|_| d.sample(&mut rng)).collect()
                    }
                };
                GridFunction::from_values(grid, values)
            }
        }
    }

    pub fn weight(&self, grid: &Grid) -> Result<Weight> {
        Weight::new(self.synthesize(grid)?)
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let fields = || -> Result<Vec<(&str, &str)>> {
            rest.split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.split_once('=')
                        .map(|(k, v)| (k.trim(), v.trim()))
                        .ok_or_else(|| Error::Parse(format!("`{p}` is not key=value in `{s}`")))
                })
                .collect()
        };
        match kind {
            "const" => Ok(FunctionSpec::Const(parse_real(rest)?)),
            "indicator" => {
                let mut ranges = Vec::new();
                for (k, v) in fields()? {
                    if k != "cells" {
                        return Err(Error::Parse(format!("unknown indicator field `{k}`")));
                    }
                    for item in v.split([';', '|']).map(str::trim).filter(|i| !i.is_empty()) {
                        let range = match item.split_once("..") {
                            Some((a, b)) => CellRange { start: parse_usize(a)?, end: parse_usize(b)? },
                            None => {
                                let c = parse_usize(item)?;
                                CellRange { start: c, end: c + 1 }
                            }
                        };
                        ranges.push(range);
                    }
                }
                Ok(FunctionSpec::Indicator(ranges))
            }
            "power" => {
                let mut exponent = None;
                let mut center = Vec::new();
                for (k, v) in fields()? {
                    match k {
                        "a" => exponent = Some(parse_real(v)?),
                        "center" => center = v.split(':').map(parse_real).collect::<Result<_>>()?,
                        _ => return Err(Error::Parse(format!("unknown power field `{k}`"))),
                    }
                }
                let exponent = exponent.ok_or_else(|| Error::Parse("power spec needs a=<exponent>".into()))?;
                Ok(FunctionSpec::Power { exponent, center })
            }
            "random" => {
                let mut seed = None;
                let mut dist = "lognormal".to_string();
                let (mut sigma, mut lo, mut hi) = (1.0, 0.0, 1.0);
                for (k, v) in fields()? {
                    match k {
                        "seed" => seed = Some(v.parse().map_err(|_| Error::Parse(format!("seed `{v}`")))?),
                        "dist" => dist = v.to_string(),
                        "sigma" => sigma = parse_real(v)?,
                        "lo" => lo = parse_real(v)?,
                        "hi" => hi = parse_real(v)?,
                        _ => return Err(Error::Parse(format!("unknown random field `{k}`"))),
                    }
                }
                let seed = seed.ok_or_else(|| Error::Parse("random spec needs seed=<u64>".into()))?;
                let dist = match dist.as_str() {
                    "lognormal" => RandomDist::LogNormal { sigma },
                    "uniform" => RandomDist::Uniform { lo, hi },
                    other => return Err(Error::Parse(format!("unknown distribution `{other}`"))),
                };
                Ok(FunctionSpec::Random { seed, dist })
            }
            other => Err(Error::Parse(format!("unknown function kind `{other}`"))),
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Const(c) => write!(f, "const:{c}"),
            FunctionSpec::Indicator(ranges) => {
                write!(f, "indicator:cells=")?;
                for (i, r) in ranges.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{}..{}", r.start, r.end)?;
                }
                Ok(())
            }
            FunctionSpec::Power { exponent, center } => {
                write!(f, "power:a={exponent}")?;
                if !center.is_empty() {
                    let c: Vec<String> = center.iter().map(|x| x.to_string()).collect();
                    write!(f, ",center={}", c.join(":"))?;
                }
                Ok(())
            }
            FunctionSpec::Random { seed, dist } => match dist {
                RandomDist::LogNormal { sigma } => write!(f, "random:seed={seed},dist=lognormal,sigma={sigma}"),
                RandomDist::Uniform { lo, hi } => write!(f, "random:seed={seed},dist=uniform,lo={lo},hi={hi}"),
            },
        }
    }
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("`{s}` is not a cell index")))
}
