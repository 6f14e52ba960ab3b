//! Least-squares scaling slope of `log(empirical)` against `log(bound)`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// coefficient of determination of the fit
    pub r2: f64,
    pub points: usize,
}

/// `points` are `(bound, empirical)` pairs in family order. Needs at least
/// four members with strictly increasing bound.
pub fn scaling_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 4 {
        return Err(Error::Harness(format!("scaling slope needs at least 4 members, got {}", points.len())));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Harness("theoretical bound is not strictly increasing along the family".into()));
    }
    if points.iter().any(|&(b, e)| !(b > 0.0 && e > 0.0 && b.is_finite() && e.is_finite())) {
        return Err(Error::Harness("scaling slope needs positive finite values".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit { slope, intercept, r2, points: points.len() })
}
