//! Empirical operator norms against theoretical bounds.
//!
//! Every empirical value is a maximum over finitely many inputs, so it is a
//! lower bound for the true operator norm. Trials run in parallel; each draws
//! from its own ChaCha stream derived from the master seed, and the maximum
//! is reduced in trial order so reports are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::ExponentTuple;
use crate::function::{CellSet, GridFunction, Weight};
use crate::grid::Grid;
use crate::harness::bounds::{theoretical_bound, TheoremBound, TheoremId};
use crate::lorentz::{lorentz_norms, weak_norm};
use crate::sparse::{build_stopping_family, sparse_operator_p0, SparseFamily};

/// `T f = Σ_j Σ_{Q∈S_j} ⟨f⟩_{p0,Q} |Q|^{α/(n q0')} χ_Q`, one family per grid.
/// Pairing `T f` against `g ≥ 0` is bounded by the bilinear sparse form of
/// the tuple, so `T` is a test subject for every estimate of the tuple.
#[derive(Clone, Debug)]
pub struct TestOperator {
    pub grids: Vec<Grid>,
    pub families: Vec<SparseFamily>,
    pub p0: f64,
    /// fractional index `α/q0'` of each average
    pub alpha: f64,
    /// declared sparseness; every family is validated against it
    pub eta: f64,
}

impl TestOperator {
    pub fn new(e: &ExponentTuple, grids: Vec<Grid>, mut families: Vec<SparseFamily>, eta: f64) -> Result<Self> {
        e.validate()?;
        if families.is_empty() {
            return Err(Error::Parameter("test operator needs at least one family".into()));
        }
        for s in families.iter_mut() {
            let grid = grids
                .iter()
                .find(|g| g.spec() == &s.grid)
                .ok_or_else(|| Error::Parameter(format!("no grid for family on {}", s.grid)))?;
            s.eta = eta;
            s.validate(grid).map_err(|v| Error::Parameter(format!("family on {} is not {eta}-sparse: {v}", s.grid)))?;
        }
        Ok(TestOperator { grids, families, p0: e.p0, alpha: e.alpha / e.q0_conj(), eta })
    }

    /// Stopping families of `w^q + w^{-q}` on every grid, which concentrate
    /// where the weight degenerates or blows up.
    pub fn stopping(e: &ExponentTuple, w: &Weight, grids: Vec<Grid>, rho: f64, eta: f64) -> Result<Self> {
        let wq = w.pow(e.q)?;
        let driver = wq.as_function().zip_map(wq.recip().as_function(), |a, b| a + b)?;
        let families = grids
            .iter()
            .map(|g| build_stopping_family(&driver, e.p0, g, rho))
            .collect::<Result<Vec<_>>>()?;
        TestOperator::new(e, grids, families, eta)
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let mut total: Option<GridFunction> = None;
        for s in &self.families {
            let grid = self.grids.iter().find(|g| g.spec() == &s.grid).expect("checked at construction");
            let part = sparse_operator_p0(s, f, self.alpha, self.p0, grid)?;
            total = Some(match total {
                None => part,
                Some(t) => t.zip_map(&part, |a, b| a + b)?,
            });
        }
        Ok(total.expect("at least one family"))
    }

    pub fn base_grid(&self) -> &Grid {
        &self.grids[0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub id: TheoremId,
    pub empirical: f64,
    pub bound: TheoremBound,
    pub ratio: f64,
    /// description of the maximizing input
    pub witness: String,
    pub trials: usize,
    pub seed: u64,
}

/// Per-trial RNG: stream `trial` of the master seed.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Maximum in trial order; ties keep the earliest trial.
fn reduce_max(values: Vec<(f64, String)>) -> Result<(f64, String)> {
    let mut best: Option<(f64, String)> = None;
    for (v, label) in values {
        if !v.is_finite() {
            return Err(Error::Harness(format!("non-finite empirical value for {label}")));
        }
        if best.as_ref().is_none_or(|b| v > b.0) {
            best = Some((v, label));
        }
    }
    best.ok_or_else(|| Error::Harness("no trials".into()))
}

/// Union of 1 to 4 random cubes of `grid`.
pub fn random_union(grid: &Grid, rng: &mut ChaCha8Rng) -> CellSet {
    let k = rng.random_range(1..=4);
    let mut cells = Vec::new();
    let levels: Vec<u32> = (0..=grid.depth()).filter(|&l| grid.level_count(l) > 0).collect();
    for _ in 0..k {
        let level = levels[rng.random_range(0..levels.len())];
        let count = grid.level_count(level);
        let q = grid.level_cubes(level).nth(rng.random_range(0..count)).expect("index in range");
        cells.extend(grid.cells(&q));
    }
    CellSet::new(cells)
}

/// Cellwise log-normal function; odd trials are localized to a random cube.
pub fn random_input(grid: &Grid, rng: &mut ChaCha8Rng, trial: usize) -> GridFunction {
    let d = LogNormal::new(0.0, 1.0).expect("valid lognormal");
    let mut values: Vec<f64> = (0..grid.cell_count()).map(|_| d.sample(rng)).collect();
    if trial % 2 == 1 {
        let set = random_union(grid, rng);
        for (c, v) in values.iter_mut().enumerate() {
            if !set.contains(c) {
                *v = 0.0;
            }
        }
    }
    GridFunction::from_values(grid, values).expect("finite samples")
}

/// Candidate sets for the restricted weak ratio: every family member cube,
/// then `trials` random dyadic unions.
fn restricted_candidates(op: &TestOperator, trials: usize, seed: u64) -> Vec<(CellSet, String)> {
    let grid = op.base_grid();
    let mut out: Vec<(CellSet, String)> = Vec::new();
    for s in &op.families {
        let g = op.grids.iter().find(|g| g.spec() == &s.grid).expect("checked");
        for m in &s.members {
            let set = CellSet::from_cube(g, &m.cube);
            if !out.iter().any(|(c, _)| *c == set) {
                let label = format!("cube {} level {} index {:?}", s.grid, m.cube.level, &m.cube.index[..g.dim()]);
                out.push((set, label));
            }
        }
    }
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        out.push((random_union(grid, &mut rng), format!("random union trial {t}")));
    }
    out
}

/// `max_F ‖T χ_F‖_{L^{q,∞}(w^q)} / ‖χ_F‖_{L^{p,1}(w^p)}` over the member cubes
/// of the operator's families and `trials` random dyadic unions.
pub fn restricted_weak_ratio(
    op: &TestOperator,
    w: &Weight,
    e: &ExponentTuple,
    trials: usize,
    seed: u64,
) -> Result<RatioReport> {
    let bound = theoretical_bound(TheoremId::RestrictedWeak, e, w, op.eta, &op.grids)?;
    let candidates = restricted_candidates(op, trials, seed);
    restricted_weak_ratio_on(op, w, e, &candidates, bound, seed)
}

pub fn restricted_weak_ratio_on(
    op: &TestOperator,
    w: &Weight,
    e: &ExponentTuple,
    candidates: &[(CellSet, String)],
    bound: TheoremBound,
    seed: u64,
) -> Result<RatioReport> {
    if candidates.is_empty() {
        return Err(Error::Harness("empty candidate list".into()));
    }
    let grid = op.base_grid();
    let wp = w.pow(e.p)?;
    let wq = w.pow(e.q)?;
    let values = candidates
        .par_iter()
        .map(|(set, label)| {
            let f = GridFunction::indicator(grid, set);
            let num = weak_norm(&op.apply(&f)?, &wq, e.q)?;
            let den = e.p * wp.set_mass(set).powf(1.0 / e.p);
            Ok((num / den, label.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (empirical, witness) = reduce_max(values)?;
    Ok(RatioReport { id: bound.id, empirical, ratio: empirical / bound.value, bound, witness, trials: candidates.len(), seed })
}

/// `max_f ‖w T(w^{-1} f)‖_{L^{q,∞}} / ‖f‖_{L^p}`, unweighted norms.
pub fn multiplier_weak_ratio(
    op: &TestOperator,
    w: &Weight,
    e: &ExponentTuple,
    trials: usize,
    seed: u64,
) -> Result<RatioReport> {
    let bound = theoretical_bound(TheoremId::multiplier(e), e, w, op.eta, &op.grids)?;
    let grid = op.base_grid();
    let lebesgue = Weight::lebesgue(grid);
    let winv = w.recip();
    let values = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let f = random_input(grid, &mut rng, t);
            let out = op.apply(&f.mul(winv.as_function())?)?.mul(w.as_function())?;
            let num = weak_norm(&out, &lebesgue, e.q)?;
            let den = lorentz_norms(&f, &lebesgue, e.p)?.strong;
            Ok((if den == 0.0 { 0.0 } else { num / den }, format!("lognormal trial {t}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let (empirical, witness) = reduce_max(values)?;
    Ok(RatioReport { id: bound.id, empirical, ratio: empirical / bound.value, bound, witness, trials, seed })
}

/// `max_f ‖T f‖_{L^q(w^q)} / ‖f‖_{L^p(w^p)}`.
pub fn strong_ratio(op: &TestOperator, w: &Weight, e: &ExponentTuple, trials: usize, seed: u64) -> Result<RatioReport> {
    let bound = theoretical_bound(TheoremId::Strong, e, w, op.eta, &op.grids)?;
    let grid = op.base_grid();
    let wp = w.pow(e.p)?;
    let wq = w.pow(e.q)?;
    let values = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let f = random_input(grid, &mut rng, t);
            let num = lorentz_norms(&op.apply(&f)?, &wq, e.q)?.strong;
            let den = lorentz_norms(&f, &wp, e.p)?.strong;
            Ok((if den == 0.0 { 0.0 } else { num / den }, format!("lognormal trial {t}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let (empirical, witness) = reduce_max(values)?;
    Ok(RatioReport { id: bound.id, empirical, ratio: empirical / bound.value, bound, witness, trials, seed })
}
