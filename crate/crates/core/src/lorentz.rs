//! Distribution functions, Lorentz norms and the dual characterization of the
//! weak norm.
//!
//! A cellwise constant `f` has a step distribution function
//! `λ(y) = u({|f| > y})`: with the distinct positive values of `|f|` sorted as
//! `0 = y_0 < y_1 < … < y_m` and `Λ_j = u({|f| ≥ y_j})`,
//!
//! ```text
//! ‖f‖_{L^{r,1}(u)} = r Σ_j (y_j − y_{j−1}) Λ_j^{1/r}
//! ‖f‖_{L^{r,∞}(u)} = max_j y_j Λ_j^{1/r}
//! ```
//!
//! so every norm is a finite sum.

use log::warn;

use crate::error::{Error, Result};
use crate::function::{CellSet, GridFunction, Weight};

/// Jump points `(y_j, Λ_j)` of the distribution function, `y` ascending.
pub fn distribution_steps(f: &GridFunction, u: &Weight) -> Result<Vec<(f64, f64)>> {
    f.check_same(u.as_function())?;
    let cell = f.cell_measure();
    let pairs = f.values().iter().zip(u.values()).map(|(v, w)| (*v, w * cell)).collect();
    Ok(steps_from_samples(pairs))
}

/// Jump points of the distribution of a finite sample of `(value, mass)`
/// pairs. Zero values carry no jump.
pub fn steps_from_samples(mut pairs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pairs.retain(|(v, _)| *v != 0.0);
    for p in pairs.iter_mut() {
        p.0 = p.0.abs();
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut steps: Vec<(f64, f64)> = Vec::new();
    let mut acc = 0.0;
    for (y, m) in pairs {
        acc += m;
        match steps.last_mut() {
            Some(last) if last.0 == y => last.1 = acc,
            _ => steps.push((y, acc)),
        }
    }
    steps.reverse();
    steps
}

/// Weak `L^{r,∞}` norm of a finite `(value, mass)` sample; `r = ∞` gives the
/// largest absolute value.
pub fn weak_norm_of_samples(pairs: Vec<(f64, f64)>, r: f64) -> f64 {
    if r.is_infinite() {
        return pairs.iter().fold(0.0, |m, (v, _)| m.max(v.abs()));
    }
    steps_from_samples(pairs).iter().fold(0.0, |m: f64, &(y, mass)| m.max(y * mass.powf(1.0 / r)))
}

/// `λ^u_f(y) = u({|f| > y})`.
pub fn distribution(f: &GridFunction, u: &Weight, y: f64) -> Result<f64> {
    f.check_same(u.as_function())?;
    let cell = f.cell_measure();
    Ok(f.values().iter().zip(u.values()).filter(|(v, _)| v.abs() > y).map(|(_, w)| w * cell).sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzNorms {
    /// `‖f‖_{L^r(u)}`
    pub strong: f64,
    /// `‖f‖_{L^{r,1}(u)}`
    pub one: f64,
    /// `‖f‖_{L^{r,∞}(u)}`
    pub weak: f64,
}

fn check_exponent(r: f64) -> Result<()> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::Parameter(format!("Lorentz exponent r = {r} must satisfy 1 <= r < inf")));
    }
    Ok(())
}

pub fn lorentz_norms(f: &GridFunction, u: &Weight, r: f64) -> Result<LorentzNorms> {
    check_exponent(r)?;
    let steps = distribution_steps(f, u)?;
    let cell = f.cell_measure();
    let strong = f
        .values()
        .iter()
        .zip(u.values())
        .map(|(v, w)| v.abs().powf(r) * w * cell)
        .sum::<f64>()
        .powf(1.0 / r);
    let mut one = 0.0;
    let mut weak: f64 = 0.0;
    let mut prev = 0.0;
    for &(y, mass) in &steps {
        let m = mass.powf(1.0 / r);
        one += (y - prev) * m;
        weak = weak.max(y * m);
        prev = y;
    }
    Ok(LorentzNorms { strong, one: r * one, weak })
}

/// `‖f‖_{L^{r,1}(u)}` through the decreasing rearrangement,
/// `∫ f*(t) t^{1/r} dt/t`, summed over the steps of `f*`.
pub fn lorentz_one_by_rearrangement(f: &GridFunction, u: &Weight, r: f64) -> Result<f64> {
    check_exponent(r)?;
    let steps = distribution_steps(f, u)?;
    let mut total = 0.0;
    for (j, &(y, mass)) in steps.iter().enumerate() {
        let next = steps.get(j + 1).map_or(0.0, |s| s.1);
        total += y * r * (mass.powf(1.0 / r) - next.powf(1.0 / r));
    }
    Ok(total)
}

/// `‖f‖_{L^{r,∞}(u)}`, allowing `r = ∞` (the essential supremum).
pub fn weak_norm(f: &GridFunction, u: &Weight, r: f64) -> Result<f64> {
    if r.is_infinite() {
        f.check_same(u.as_function())?;
        return Ok(f.max_abs());
    }
    Ok(lorentz_norms(f, u, r)?.weak)
}

/// Result of the dual weak-norm estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct DualEstimate {
    pub value: f64,
    /// index into the candidate list of the maximizing `G`
    pub witness: usize,
}

/// `min` over `G' ⊆ G` with `u(G') ≥ u(G)/2` of `u(G')^{-1+1/q} ∫_{G'} h du`.
///
/// The minimum sits at `u(G') = u(G)/2` exactly, filled with the cells of
/// smallest `h` first (ties by cell index) and one fractional boundary cell.
/// Returns `None` when `u(G) = 0`.
pub fn dual_inner_min(h: &GridFunction, u: &Weight, q: f64, set: &CellSet) -> Option<f64> {
    let cell = h.cell_measure();
    let mut cells: Vec<usize> = set.cells().to_vec();
    let total: f64 = cells.iter().map(|&c| u.values()[c] * cell).sum();
    if total <= 0.0 {
        return None;
    }
    cells.sort_by(|&a, &b| h.values()[a].total_cmp(&h.values()[b]).then(a.cmp(&b)));
    let target = total / 2.0;
    let mut mass = 0.0;
    let mut integral = 0.0;
    for &c in &cells {
        let m = u.values()[c] * cell;
        let hv = h.values()[c];
        if mass + m >= target {
            integral += hv * (target - mass);
            break;
        }
        mass += m;
        integral += hv * m;
    }
    Some(target.powf(-1.0 + 1.0 / q) * integral)
}

/// Lower-bound proxy for `‖h‖_{L^{q,∞}(w^q)}`: the maximum over candidate
/// sets `G` of [`dual_inner_min`] with measure `w^q`. Candidates of zero mass
/// are skipped.
pub fn weak_dual_estimate(h: &GridFunction, w: &Weight, q: f64, candidates: &[CellSet]) -> Result<DualEstimate> {
    h.require_nonnegative()?;
    h.check_same(w.as_function())?;
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::Parameter(format!("q = {q} must satisfy 1 <= q < inf")));
    }
    let u = w.pow(q)?;
    let mut best: Option<DualEstimate> = None;
    for (i, g) in candidates.iter().enumerate() {
        match dual_inner_min(h, &u, q, g) {
            None => warn!("candidate {i} has zero w^q mass; skipped"),
            Some(v) => {
                if best.as_ref().is_none_or(|b| v > b.value) {
                    best = Some(DualEstimate { value: v, witness: i });
                }
            }
        }
    }
    best.ok_or_else(|| Error::Parameter("no candidate set with positive w^q mass".into()))
}

/// The sets `{h ≥ y_j}` for every distinct positive value `y_j` of `h`,
/// followed by the whole domain.
pub fn level_set_candidates(h: &GridFunction) -> Vec<CellSet> {
    let mut values: Vec<f64> = h.values().iter().copied().filter(|v| *v > 0.0).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut out: Vec<CellSet> = values
        .iter()
        .map(|&y| CellSet::new((0..h.len()).filter(|&c| h.values()[c] >= y).collect()))
        .collect();
    out.push(CellSet::new((0..h.len()).collect()));
    out
}
