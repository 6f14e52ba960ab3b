//! Theoretical bounds assembled from weight constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::{ap_constant, ar_pq_constant, doubling_constant, fujii_wilson, rh_constant};
use crate::error::{Error, Result};
use crate::exponents::ExponentTuple;
use crate::function::Weight;
use crate::grid::Grid;
use crate::maximal::strong_constant;

/// Which estimate a bound or ratio refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    /// `L^{p,1}(w^p) → L^{q,∞}(w^q)` for characteristic functions
    RestrictedWeak,
    /// `f ↦ w T(w^{-1} f)`, `L^p → L^{q,∞}`, with `q0 = ∞`
    MultiplierWeakInfinite,
    /// the same with `q0 < ∞`
    MultiplierWeakFinite,
    /// `L^p(w^p) → L^q(w^q)`
    Strong,
    /// strong type of the weighted dyadic fractional maximal operator
    FractionalMaximal,
}

impl TheoremId {
    pub fn name(&self) -> &'static str {
        match self {
            TheoremId::RestrictedWeak => "restricted-weak",
            TheoremId::MultiplierWeakInfinite => "multiplier-weak-inf",
            TheoremId::MultiplierWeakFinite => "multiplier-weak-fin",
            TheoremId::Strong => "strong",
            TheoremId::FractionalMaximal => "fractional-maximal",
        }
    }

    /// The multiplier case matching `q0`.
    pub fn multiplier(e: &ExponentTuple) -> Self {
        if e.q0.is_infinite() {
            TheoremId::MultiplierWeakInfinite
        } else {
            TheoremId::MultiplierWeakFinite
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "restricted-weak" => TheoremId::RestrictedWeak,
            "multiplier-weak-inf" => TheoremId::MultiplierWeakInfinite,
            "multiplier-weak-fin" => TheoremId::MultiplierWeakFinite,
            "strong" => TheoremId::Strong,
            "fractional-maximal" => TheoremId::FractionalMaximal,
            other => return Err(Error::Parse(format!("unknown estimate `{other}`"))),
        })
    }
}

/// One constant entering a bound, raised to `power`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundFactor {
    pub name: String,
    pub value: f64,
    pub power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    pub id: TheoremId,
    pub exponents: ExponentTuple,
    pub factors: Vec<BoundFactor>,
    pub value: f64,
    pub theta: Option<f64>,
}

impl TheoremBound {
    fn assemble(id: TheoremId, e: &ExponentTuple, factors: Vec<BoundFactor>, theta: Option<f64>) -> Result<Self> {
        if let Some(bad) = factors.iter().find(|f| !(f.value.is_finite() && f.value > 0.0)) {
            return Err(Error::Parameter(format!("{} = {} is outside the weight class", bad.name, bad.value)));
        }
        let value = factors.iter().map(|f| f.value.powf(f.power)).product();
        Ok(TheoremBound { id, exponents: *e, factors, value, theta })
    }

    pub fn factor(&self, name: &str) -> Option<f64> {
        self.factors.iter().find(|f| f.name == name).map(|f| f.value)
    }
}

fn factor(name: &str, value: f64, power: f64) -> BoundFactor {
    BoundFactor { name: name.to_string(), value, power }
}

/// `θ = max{ (q0/q)' (1 − α/n)/q0', (1/p0 − α/(n q0')) / (q (1/p0 − 1/p)) }`,
/// defined for `p0 < p`.
pub fn theta(e: &ExponentTuple) -> Result<f64> {
    e.validate()?;
    if e.p0 >= e.p {
        return Err(Error::Exponents(format!("the strong estimate needs p0 < p, got p0={} p={}", e.p0, e.p)));
    }
    let n = e.n as f64;
    let first = e.rh_index() * (1.0 - e.alpha / n) / e.q0_conj();
    let second = (1.0 / e.p0 - e.gap()) / (e.q * (1.0 / e.p0 - 1.0 / e.p));
    Ok(first.max(second))
}

/// Assembles the bound of `id` from the constants of `w^q` over `grids`
/// (normally all `3^n` shifted grids). `eta` is the sparseness of the
/// dominating families; only the restricted weak bound uses it.
pub fn theoretical_bound(id: TheoremId, e: &ExponentTuple, w: &Weight, eta: f64, grids: &[Grid]) -> Result<TheoremBound> {
    e.validate()?;
    let n = grids.first().ok_or_else(|| Error::Parameter("no grids supplied".into()))?.dim();
    if n != e.n {
        return Err(Error::Exponents(format!("exponent tuple has n={}, grid has n={n}", e.n)));
    }
    let wq = w.pow(e.q)?;
    let rh = || rh_constant(&wq, e.rh_index(), grids).map(|r| r.value);
    match id {
        TheoremId::RestrictedWeak => {
            let class = e.restricted_class();
            let ar = ar_pq_constant(&w.pow(e.p0)?, &class, grids)?.value;
            let d_eta = doubling_constant(&wq, eta, grids)?.value;
            let d_children = doubling_constant(&wq, (-(n as f64)).exp2(), grids)?.value;
            TheoremBound::assemble(
                id,
                e,
                vec![
                    factor("AR", ar, 1.0 / e.p0),
                    factor("RH", rh()?, e.rh_index() + 1.0 / e.q),
                    factor("D_eta", d_eta, 1.0),
                    factor("D_2n", d_children, 1.0 / e.q),
                ],
                None,
            )
        }
        TheoremId::MultiplierWeakInfinite | TheoremId::MultiplierWeakFinite => {
            let expected = TheoremId::multiplier(e);
            if id != expected {
                return Err(Error::Exponents(format!("{id} does not match q0 = {}; use {expected}", e.q0)));
            }
            let ap = ap_constant(&wq, e.ap_index(), grids)?.value;
            let second = if e.q0.is_infinite() {
                factor("A_inf", fujii_wilson(&wq, grids)?.value, 1.0)
            } else {
                factor("RH", rh()?, e.rh_index() + 2.0 / e.q)
            };
            TheoremBound::assemble(id, e, vec![factor("A", ap, 1.0 / e.q), second], None)
        }
        TheoremId::Strong => {
            let t = theta(e)?;
            let ap = ap_constant(&wq, e.ap_index(), grids)?.value;
            TheoremBound::assemble(id, e, vec![factor("A", ap, t), factor("RH", rh()?, t)], Some(t))
        }
        TheoremId::FractionalMaximal => {
            let q = 1.0 / (1.0 / e.p - e.alpha / n as f64);
            TheoremBound::assemble(id, e, vec![factor("C", strong_constant(e.p, q, e.alpha, n), 1.0)], None)
        }
    }
}

/// The closed-form estimate `K^{q/p0} η^{-(q/p0 − αq/(n q0'))}` for
/// `D^η_{w^q}`, with `K` the restricted constant of `w^{p0}`.
pub fn doubling_estimate(restricted: f64, e: &ExponentTuple, eta: f64) -> f64 {
    let power = e.q / e.p0 - e.alpha * e.q / (e.n as f64 * e.q0_conj());
    restricted.powf(e.q / e.p0) * eta.powf(-power)
}
