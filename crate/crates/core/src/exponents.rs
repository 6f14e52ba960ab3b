//! Exponent bookkeeping for the weighted estimates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when checking the scaling relation between `p`, `q` and `α`.
pub const RELATION_TOL: f64 = 1e-12;

/// Hölder conjugate `p/(p-1)`, with `1' = ∞` and `∞' = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `1/p` with `1/∞ = 0`.
pub fn recip(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// Parses a decimal, a fraction `a/b`, or `inf`.
pub fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" | "∞" => return Ok(f64::INFINITY),
        _ => {}
    }
    let v = if let Some((a, b)) = t.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| Error::Parse(format!("`{s}` is not a number")))?;
        let b: f64 = b.trim().parse().map_err(|_| Error::Parse(format!("`{s}` is not a number")))?;
        a / b
    } else {
        t.parse().map_err(|_| Error::Parse(format!("`{s}` is not a number")))?
    };
    if v.is_nan() {
        return Err(Error::Parse(format!("`{s}` is not a number")));
    }
    Ok(v)
}

/// `(n, p0, q0, p, q, α)` subject to
/// `1 ≤ p0 ≤ p ≤ q < q0 ≤ ∞`, `1/p − 1/q = α/(n q0')`, `0 ≤ α < n`
/// and `1/p0 − 1/q0 > α/(n q0')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTuple {
    pub n: usize,
    pub p0: f64,
    pub q0: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

impl ExponentTuple {
    pub fn new(n: usize, p0: f64, q0: f64, p: f64, q: f64, alpha: f64) -> Result<Self> {
        let e = ExponentTuple { n, p0, q0, p, q, alpha };
        e.validate()?;
        Ok(e)
    }

    /// Solves the scaling relation for `q`.
    pub fn with_alpha(n: usize, p0: f64, q0: f64, p: f64, alpha: f64) -> Result<Self> {
        let inv_q = 1.0 / p - alpha / (n as f64 * conjugate(q0));
        if inv_q <= 0.0 {
            return Err(Error::Exponents(format!("1/p - α/(n q0') = {inv_q} must be positive")));
        }
        ExponentTuple::new(n, p0, q0, p, 1.0 / inv_q, alpha)
    }

    /// Solves the scaling relation for `α`.
    pub fn with_q(n: usize, p0: f64, q0: f64, p: f64, q: f64) -> Result<Self> {
        let alpha = (1.0 / p - 1.0 / q) * n as f64 * conjugate(q0);
        ExponentTuple::new(n, p0, q0, p, q, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        let ExponentTuple { n, p0, q0, p, q, alpha } = *self;
        let fail = |m: String| Err(Error::Exponents(m));
        if n == 0 {
            return fail("n must be positive".into());
        }
        if [p0, p, q].iter().any(|x| !x.is_finite()) || q0.is_nan() {
            return fail("p0, p, q must be finite".into());
        }
        if !(1.0 <= p0 && p0 <= p && p <= q && q < q0) {
            return fail(format!("need 1 <= p0 <= p <= q < q0, got p0={p0}, p={p}, q={q}, q0={q0}"));
        }
        if !(0.0 <= alpha && alpha < n as f64) {
            return fail(format!("need 0 <= alpha < n, got alpha={alpha}, n={n}"));
        }
        let scale = self.gap();
        if (1.0 / p - 1.0 / q - scale).abs() > RELATION_TOL {
            return fail(format!(
                "need 1/p - 1/q = alpha/(n q0'), got {} vs {}",
                1.0 / p - 1.0 / q,
                scale
            ));
        }
        if 1.0 / p0 - recip(q0) <= scale {
            return fail(format!("need 1/p0 - 1/q0 > alpha/(n q0'), got {} <= {scale}", 1.0 / p0 - recip(q0)));
        }
        Ok(())
    }

    /// `α/(n q0')`, the gap `1/p − 1/q`.
    pub fn gap(&self) -> f64 {
        self.alpha / (self.n as f64 * conjugate(self.q0))
    }

    pub fn q0_conj(&self) -> f64 {
        conjugate(self.q0)
    }

    /// Reverse Hölder index `(q0/q)'`; equals 1 when `q0 = ∞`.
    pub fn rh_index(&self) -> f64 {
        if self.q0.is_infinite() {
            1.0
        } else {
            conjugate(self.q0 / self.q)
        }
    }

    /// Muckenhoupt index `(1/p0 − 1/p) q + 1`.
    pub fn ap_index(&self) -> f64 {
        (1.0 / self.p0 - 1.0 / self.p) * self.q + 1.0
    }

    /// Exponents `(p/p0, q/p0, p0 α / q0')` of the restricted weak-type class
    /// applied to `w^{p0}`.
    pub fn restricted_class(&self) -> ArExponents {
        ArExponents {
            p: self.p / self.p0,
            q: self.q / self.p0,
            alpha: self.p0 * self.alpha / self.q0_conj(),
        }
    }
}

impl fmt::Display for ExponentTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} p0={} q0={} p={} q={} alpha={}",
            self.n, self.p0, self.q0, self.p, self.q, self.alpha
        )
    }
}

/// `(p, q, α)` for the restricted weak-type weight class, with
/// `1 ≤ p ≤ q < ∞` and `1/p − 1/q = α/n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArExponents {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

impl ArExponents {
    pub fn new(p: f64, q: f64, alpha: f64) -> Self {
        ArExponents { p, q, alpha }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let ArExponents { p, q, alpha } = *self;
        if !(1.0 <= p && p <= q && q.is_finite()) {
            return Err(Error::Exponents(format!("need 1 <= p <= q < inf, got p={p}, q={q}")));
        }
        if !(0.0 <= alpha && alpha < n as f64) {
            return Err(Error::Exponents(format!("need 0 <= alpha < n, got alpha={alpha}")));
        }
        if (1.0 / p - 1.0 / q - alpha / n as f64).abs() > RELATION_TOL {
            return Err(Error::Exponents(format!(
                "need 1/p - 1/q = alpha/n, got {} vs {}",
                1.0 / p - 1.0 / q,
                alpha / n as f64
            )));
        }
        Ok(())
    }
}
