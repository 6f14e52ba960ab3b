//! Randomized hill climbing on a ratio over weights and input sets.
//!
//! A move either multiplies the weight on a random cube by `exp(s Z)` with
//! `Z` standard normal, or toggles a random cube in the input set. A move is
//! kept only if it strictly increases the objective.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::ExponentTuple;
use crate::function::{CellSet, GridFunction, Weight};
use crate::grid::Grid;
use crate::harness::bounds::{theoretical_bound, TheoremId};
use crate::harness::ratios::{trial_rng, TestOperator};
use crate::lorentz::weak_norm;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MoveSet {
    pub perturb_weight: bool,
    pub toggle_set: bool,
    /// standard deviation of the log-multiplier
    pub step: f64,
}

impl Default for MoveSet {
    fn default() -> Self {
        MoveSet { perturb_weight: true, toggle_set: true, step: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalReport {
    pub initial: f64,
    pub best: f64,
    pub accepted: usize,
    pub iterations: usize,
    pub seed: u64,
    #[serde(skip)]
    pub weight: Weight,
    #[serde(skip)]
    pub set: CellSet,
}

pub fn extremal_search(
    grid: &Grid,
    objective: impl Fn(&Weight, &CellSet) -> Result<f64>,
    start_weight: Weight,
    start_set: CellSet,
    seed: u64,
    iterations: usize,
    moves: MoveSet,
) -> Result<ExtremalReport> {
    if iterations == 0 {
        return Err(Error::Parameter("extremal search needs at least one iteration".into()));
    }
    let mut rng = trial_rng(seed, 0);
    let initial = objective(&start_weight, &start_set)?;
    let (mut weight, mut set, mut best) = (start_weight, start_set, initial);
    let mut accepted = 0;
    for _ in 0..iterations {
        let level = rng.random_range(0..=grid.depth());
        let q = grid.level_cubes(level).nth(rng.random_range(0..grid.level_count(level))).expect("in range");
        let cube = CellSet::from_cube(grid, &q);
        let weight_move = match (moves.perturb_weight, moves.toggle_set) {
            (true, true) => rng.random_bool(0.5),
            (true, false) => true,
            (false, true) => false,
            (false, false) => continue,
        };
        let (cand_w, cand_s) = if weight_move {
            let z: f64 = StandardNormal.sample(&mut rng);
            let factor = (moves.step * z).exp();
            let mut v = weight.values().to_vec();
            for &c in cube.cells() {
                v[c] *= factor;
            }
            (Weight::from_values(grid, v)?, set.clone())
        } else {
            let toggled = if cube.is_subset(&set) {
                set.difference(&cube)
            } else {
                CellSet::new(set.cells().iter().chain(cube.cells()).copied().collect())
            };
            if toggled.is_empty() {
                continue;
            }
            (weight.clone(), toggled)
        };
        let value = objective(&cand_w, &cand_s)?;
        if value > best {
            best = value;
            weight = cand_w;
            set = cand_s;
            accepted += 1;
        }
    }
    Ok(ExtremalReport { initial, best, accepted, iterations, seed, weight, set })
}

/// Restricted weak ratio of a single input set against the bound for the
/// current weight, with the operator held fixed.
pub fn restricted_weak_objective<'a>(
    op: &'a TestOperator,
    e: &'a ExponentTuple,
) -> impl Fn(&Weight, &CellSet) -> Result<f64> + 'a {
    move |w, set| {
        let grid = op.base_grid();
        let bound = theoretical_bound(TheoremId::RestrictedWeak, e, w, op.eta, &op.grids)?;
        let f = GridFunction::indicator(grid, set);
        let num = weak_norm(&op.apply(&f)?, &w.pow(e.q)?, e.q)?;
        let den = e.p * w.pow(e.p)?.set_mass(set).powf(1.0 / e.p);
        Ok(num / den / bound.value)
    }
}
