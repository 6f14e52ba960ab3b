//! Weight characteristics as suprema over the cubes of one or more grids.
//!
//! Every supremum ranges over the truncated grid(s) only, so each value is a
//! lower bound for the corresponding constant on `R^n`. Reports carry the
//! grid depth so convergence in `L` can be studied.
//!
//! Inner suprema over subsets `E ⊆ Q` are solved exactly using cellwise
//! constancy: the extremal sets are sublevel sets of the weight inside `Q`,
//! realized as a prefix of the cells sorted by weight (ties by cell index)
//! plus at most one fractionally included cell.

use std::fmt;

use crate::error::{Error, Result};
use crate::exponents::{conjugate, ArExponents};
use crate::function::{CellSet, GridFunction, Weight};
use crate::grid::{DyadicCube, Grid, GridSpec};
use crate::lorentz::{weak_norm, weak_norm_of_samples};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConstantKind {
    /// Muckenhoupt `[w]_{A_p}`
    Ap { p: f64 },
    /// Fujii–Wilson `[w]_{A_∞}` with the dyadic maximal operator
    FujiiWilson,
    /// Reverse Hölder `[w]_{RH_s}`
    ReverseHolder { s: f64 },
    /// Restricted weak-type `[w]_{A^R_p}`
    RestrictedP { p: f64 },
    /// Restricted weak-type `[w]_{A^R_{p,q}}`
    RestrictedPQ(ArExponents),
    /// The weak-norm form `[w]'_{A^R_{p,q}}`
    RestrictedPQPrime(ArExponents),
    /// Doubling constant `D^η_u`
    Doubling { eta: f64 },
}

impl fmt::Display for ConstantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstantKind::Ap { p } => write!(f, "A_p(p={p})"),
            ConstantKind::FujiiWilson => write!(f, "A_inf"),
            ConstantKind::ReverseHolder { s } => write!(f, "RH_s(s={s})"),
            ConstantKind::RestrictedP { p } => write!(f, "AR_p(p={p})"),
            ConstantKind::RestrictedPQ(e) => write!(f, "AR_pq(p={},q={},alpha={})", e.p, e.q, e.alpha),
            ConstantKind::RestrictedPQPrime(e) => write!(f, "AR_pq'(p={},q={},alpha={})", e.p, e.q, e.alpha),
            ConstantKind::Doubling { eta } => write!(f, "D(eta={eta})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// closed form per cube
    Exact,
    /// sorted-prefix inner optimization
    Greedy,
    /// exhaustive subset enumeration
    Brute,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Exact => "exact",
            Algorithm::Greedy => "greedy",
            Algorithm::Brute => "brute",
        })
    }
}

/// A set of whole cells plus at most one cell included with a fraction in
/// `(0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalSet {
    pub cells: CellSet,
    pub partial: Option<(usize, f64)>,
}

impl FractionalSet {
    pub fn whole(cells: CellSet) -> Self {
        FractionalSet { cells, partial: None }
    }

    /// `∫_E d dx` for cell densities `d`.
    pub fn integral(&self, density: &[f64], cell: f64) -> f64 {
        let whole: f64 = self.cells.cells().iter().map(|&c| density[c]).sum();
        let part = self.partial.map_or(0.0, |(c, t)| t * density[c]);
        (whole + part) * cell
    }

    pub fn measure(&self, cell: f64) -> f64 {
        (self.cells.len() as f64 + self.partial.map_or(0.0, |(_, t)| t)) * cell
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub grid: GridSpec,
    pub cube: DyadicCube,
    pub subset: Option<FractionalSet>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantReport {
    pub kind: ConstantKind,
    pub value: f64,
    pub witness: Option<Witness>,
    pub algorithm: Algorithm,
    pub depth: u32,
}

impl ConstantReport {
    /// Recomputes the per-cube objective at the witness. Reports without a
    /// witness (`RH_1`) return their value.
    pub fn reevaluate(&self, w: &Weight) -> Result<f64> {
        let Some(wit) = &self.witness else { return Ok(self.value) };
        let grid = Grid::new(wit.grid)?;
        w.check_grid(&grid)?;
        let q = &wit.cube;
        let need_subset = || {
            wit.subset.as_ref().ok_or_else(|| Error::Parameter("witness is missing its subset".into()))
        };
        Ok(match self.kind {
            ConstantKind::Ap { p } => ap_on_cube(w, p, &grid, q),
            ConstantKind::FujiiWilson => fujii_wilson_on_cube(w, &grid, q),
            ConstantKind::ReverseHolder { s } => rh_on_cube(w, s, &grid, q),
            ConstantKind::RestrictedP { p } => ar_p_on_set(w, p, &grid, q, need_subset()?),
            ConstantKind::RestrictedPQ(e) => ar_pq_on_set(w, &e, &grid, q, need_subset()?)?,
            ConstantKind::RestrictedPQPrime(e) => ar_pq_prime_on_cube(w, &e, &grid, q)?,
            ConstantKind::Doubling { .. } => doubling_on_set(w, &grid, q, need_subset()?),
        })
    }

    pub fn witness_label(&self) -> String {
        match &self.witness {
            None => "-".into(),
            Some(w) => {
                let grid = Grid::new(w.grid).expect("witness grid was valid");
                let b: Vec<String> = grid.bounds(&w.cube).iter().map(|(a, b)| format!("[{a},{b})")).collect();
                let mut s = format!("{} {}", w.grid, b.join("x"));
                if let Some(set) = &w.subset {
                    s.push_str(&format!(" |E|={}cells", set.cells.len()));
                    if let Some((c, t)) = set.partial {
                        s.push_str(&format!("+{t:.6}*cell{c}"));
                    }
                }
                s
            }
        }
    }
}

impl fmt::Display for ConstantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {:.12} ({}, L={}) at {}", self.kind, self.value, self.algorithm, self.depth, self.witness_label())
    }
}

fn check_grids(w: &Weight, grids: &[Grid]) -> Result<u32> {
    let first = grids.first().ok_or_else(|| Error::Parameter("no grids supplied".into()))?;
    for g in grids {
        w.check_grid(g)?;
    }
    Ok(first.depth())
}

/// Max-reduction over all cubes of all grids; ties keep the first cube.
fn sup_over_cubes(
    w: &Weight,
    grids: &[Grid],
    kind: ConstantKind,
    algorithm: Algorithm,
    mut per_cube: impl FnMut(&Grid, &DyadicCube) -> (f64, Option<FractionalSet>),
) -> Result<ConstantReport> {
    let depth = check_grids(w, grids)?;
    let mut best = ConstantReport { kind, value: f64::NEG_INFINITY, witness: None, algorithm, depth };
    for grid in grids {
        for q in grid.cubes() {
            let (v, subset) = per_cube(grid, &q);
            if v > best.value {
                best.value = v;
                best.witness = Some(Witness { grid: *grid.spec(), cube: q, subset });
            }
        }
    }
    if best.witness.is_none() {
        return Err(Error::Parameter("grids contain no cubes".into()));
    }
    Ok(best)
}

fn cube_values(w: &Weight, grid: &Grid, q: &DyadicCube) -> Vec<f64> {
    grid.cells(q).map(|c| w.values()[c]).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn ap_on_cube(w: &Weight, p: f64, grid: &Grid, q: &DyadicCube) -> f64 {
    let v = cube_values(w, grid, q);
    let avg = mean(&v);
    if p == 1.0 {
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        return avg / min;
    }
    let e = 1.0 - conjugate(p);
    let dual = mean(&v.iter().map(|x| x.powf(e)).collect::<Vec<_>>());
    avg * dual.powf(p - 1.0)
}

/// `[w]_{A_p} = sup_Q ⟨w⟩_Q ⟨w^{1-p'}⟩_Q^{p-1}`; for `p = 1`,
/// `⟨w⟩_Q / min_Q w`.
pub fn ap_constant(w: &Weight, p: f64, grids: &[Grid]) -> Result<ConstantReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("A_p needs 1 <= p < inf, got {p}")));
    }
    sup_over_cubes(w, grids, ConstantKind::Ap { p }, Algorithm::Exact, |g, q| (ap_on_cube(w, p, g, q), None))
}

/// `w(Q)^{-1} ∫_Q M(wχ_Q)` with `M` the dyadic maximal operator of the grid.
/// Only subcubes of `Q` matter: any larger cube averages `wχ_Q` to at most
/// `⟨w⟩_Q`.
pub fn fujii_wilson_on_cube(w: &Weight, grid: &Grid, q: &DyadicCube) -> f64 {
    let values = w.values();
    let mut integral = 0.0;
    let mut stack = vec![(*q, 0.0f64)];
    while let Some((r, running)) = stack.pop() {
        let cells = grid.cube_cell_count(&r) as f64;
        let avg = grid.cells(&r).map(|c| values[c]).sum::<f64>() / cells;
        let m = running.max(avg);
        if r.level == grid.depth() {
            integral += m;
        } else {
            stack.extend(grid.children(&r).into_iter().map(|c| (c, m)));
        }
    }
    let total: f64 = grid.cells(q).map(|c| values[c]).sum();
    integral / total
}

pub fn fujii_wilson(w: &Weight, grids: &[Grid]) -> Result<ConstantReport> {
    sup_over_cubes(w, grids, ConstantKind::FujiiWilson, Algorithm::Exact, |g, q| {
        (fujii_wilson_on_cube(w, g, q), None)
    })
}

pub fn rh_on_cube(w: &Weight, s: f64, grid: &Grid, q: &DyadicCube) -> f64 {
    if s == 1.0 {
        return 1.0;
    }
    let v = cube_values(w, grid, q);
    let avg = mean(&v);
    if s.is_infinite() {
        return v.iter().copied().fold(0.0, f64::max) / avg;
    }
    mean(&v.iter().map(|x| x.powf(s)).collect::<Vec<_>>()).powf(1.0 / s) / avg
}

/// `[w]_{RH_s} = sup_Q ⟨w⟩_{s,Q}/⟨w⟩_Q`; `s = ∞` uses the maximum and
/// `[w]_{RH_1} = 1` by convention.
pub fn rh_constant(w: &Weight, s: f64, grids: &[Grid]) -> Result<ConstantReport> {
    if s.is_nan() || s < 1.0 {
        return Err(Error::Parameter(format!("RH_s needs s >= 1, got {s}")));
    }
    if s == 1.0 {
        let depth = check_grids(w, grids)?;
        return Ok(ConstantReport {
            kind: ConstantKind::ReverseHolder { s },
            value: 1.0,
            witness: None,
            algorithm: Algorithm::Exact,
            depth,
        });
    }
    sup_over_cubes(w, grids, ConstantKind::ReverseHolder { s }, Algorithm::Exact, |g, q| {
        (rh_on_cube(w, s, g, q), None)
    })
}

/// Largest `|E| / (∫_E d)^{1/p}` over `E ⊆ Q`, for cell densities `d`.
///
/// For a fixed `|E|` the denominator is smallest on a sublevel set of `d`, so
/// only fills in ascending order need checking. Along one partially filled
/// cell the logarithmic derivative changes sign at most once, from negative
/// to positive, so the maximum is attained at a whole-cell prefix.
fn best_sublevel_prefix(grid: &Grid, q: &DyadicCube, density: &[f64], p: f64) -> (f64, CellSet) {
    let mut cells: Vec<usize> = grid.cells(q).collect();
    cells.sort_by(|&a, &b| density[a].total_cmp(&density[b]).then(a.cmp(&b)));
    let cell = grid.cell_measure();
    let mut best = (f64::NEG_INFINITY, 0);
    let mut sum = 0.0;
    for (j, &c) in cells.iter().enumerate() {
        sum += density[c];
        let ratio = (j + 1) as f64 * cell / (sum * cell).powf(1.0 / p);
        if ratio > best.0 {
            best = (ratio, j + 1);
        }
    }
    cells.truncate(best.1);
    (best.0, CellSet::new(cells))
}

pub fn ar_p_on_set(w: &Weight, p: f64, grid: &Grid, q: &DyadicCube, set: &FractionalSet) -> f64 {
    let cell = grid.cell_measure();
    let wq = w.cube_mass(grid, q);
    let we = set.integral(w.values(), cell);
    set.measure(cell) / grid.measure(q) * (wq / we).powf(1.0 / p)
}

/// `[w]_{A^R_p} = sup_Q sup_{E⊆Q} |E|/|Q| (w(Q)/w(E))^{1/p}`.
pub fn ar_p_constant(w: &Weight, p: f64, grids: &[Grid]) -> Result<ConstantReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("A^R_p needs 1 <= p < inf, got {p}")));
    }
    sup_over_cubes(w, grids, ConstantKind::RestrictedP { p }, Algorithm::Greedy, |g, q| {
        let (ratio, set) = best_sublevel_prefix(g, q, w.values(), p);
        let v = ratio / g.measure(q) * w.cube_mass(g, q).powf(1.0 / p);
        (v, Some(FractionalSet::whole(set)))
    })
}

pub fn ar_pq_on_set(w: &Weight, e: &ArExponents, grid: &Grid, q: &DyadicCube, set: &FractionalSet) -> Result<f64> {
    let cell = grid.cell_measure();
    let n = grid.dim() as f64;
    let wp = w.pow(e.p)?;
    let wq = w.pow(e.q)?;
    let mass_p = set.integral(wp.values(), cell);
    Ok(set.measure(cell) * grid.measure(q).powf(e.alpha / n - 1.0) * wq.cube_mass(grid, q).powf(1.0 / e.q)
        / mass_p.powf(1.0 / e.p))
}

/// `[w]_{A^R_{p,q}} = sup_Q sup_{E⊆Q} |E| |Q|^{α/n-1} w^q(Q)^{1/q} / w^p(E)^{1/p}`.
pub fn ar_pq_constant(w: &Weight, e: &ArExponents, grids: &[Grid]) -> Result<ConstantReport> {
    let n = grids.first().map_or(1, Grid::dim);
    e.validate(n)?;
    let wp = w.pow(e.p)?;
    let wq = w.pow(e.q)?;
    sup_over_cubes(w, grids, ConstantKind::RestrictedPQ(*e), Algorithm::Greedy, |g, q| {
        let (v, set) = ar_pq_greedy(&wp, &wq, e, g, q);
        (v, Some(set))
    })
}

fn ar_pq_greedy(wp: &Weight, wq: &Weight, e: &ArExponents, grid: &Grid, q: &DyadicCube) -> (f64, FractionalSet) {
    let n = grid.dim() as f64;
    let (ratio, set) = best_sublevel_prefix(grid, q, wp.values(), e.p);
    let v = ratio * grid.measure(q).powf(e.alpha / n - 1.0) * wq.cube_mass(grid, q).powf(1.0 / e.q);
    (v, FractionalSet::whole(set))
}

/// Inner supremum of `[w]_{A^R_{p,q}}` on one cube, with its maximizing set.
pub fn ar_pq_on_cube(w: &Weight, e: &ArExponents, grid: &Grid, q: &DyadicCube) -> Result<(f64, FractionalSet)> {
    e.validate(grid.dim())?;
    w.check_grid(grid)?;
    Ok(ar_pq_greedy(&w.pow(e.p)?, &w.pow(e.q)?, e, grid, q))
}

fn weak_of_inverse_on_cube(w: &Weight, e: &ArExponents, grid: &Grid, q: &DyadicCube) -> f64 {
    let cell = grid.cell_measure();
    let samples = grid
        .cells(q)
        .map(|c| {
            let wp = w.values()[c].powf(e.p);
            (1.0 / wp, wp * cell)
        })
        .collect();
    weak_norm_of_samples(samples, conjugate(e.p))
}

/// Per-cube value of `[w]'`, computing the weak norm of `χ_Q w^{-p}` on the
/// whole grid.
pub fn ar_pq_prime_on_cube(w: &Weight, e: &ArExponents, grid: &Grid, q: &DyadicCube) -> Result<f64> {
    let n = grid.dim() as f64;
    let wp = w.pow(e.p)?;
    let mut f = vec![0.0; grid.cell_count()];
    for c in grid.cells(q) {
        f[c] = 1.0 / wp.values()[c];
    }
    let f = GridFunction::from_values(grid, f)?;
    let weak = weak_norm(&f, &wp, conjugate(e.p))?;
    Ok(w.pow(e.q)?.cube_mass(grid, q).powf(1.0 / e.q) * weak * grid.measure(q).powf(e.alpha / n - 1.0))
}

/// `[w]'_{A^R_{p,q}} = sup_Q w^q(Q)^{1/q} ‖χ_Q w^{-p}‖_{L^{p',∞}(w^p)} |Q|^{α/n-1}`.
pub fn ar_pq_prime(w: &Weight, e: &ArExponents, grids: &[Grid]) -> Result<ConstantReport> {
    let n = grids.first().map_or(1, Grid::dim);
    e.validate(n)?;
    let wq = w.pow(e.q)?;
    sup_over_cubes(w, grids, ConstantKind::RestrictedPQPrime(*e), Algorithm::Exact, |g, q| {
        let weak = weak_of_inverse_on_cube(w, e, g, q);
        (wq.cube_mass(g, q).powf(1.0 / e.q) * weak * g.measure(q).powf(e.alpha / n as f64 - 1.0), None)
    })
}

pub fn doubling_on_set(u: &Weight, grid: &Grid, q: &DyadicCube, set: &FractionalSet) -> f64 {
    u.cube_mass(grid, q) / set.integral(u.values(), grid.cell_measure())
}

/// Lightest subset of `Q` of measure exactly `η|Q|`: cells in ascending order
/// of `u`, the last one fractional.
fn lightest_fill(u: &Weight, grid: &Grid, q: &DyadicCube, eta: f64) -> FractionalSet {
    let mut cells: Vec<usize> = grid.cells(q).collect();
    cells.sort_by(|&a, &b| u.values()[a].total_cmp(&u.values()[b]).then(a.cmp(&b)));
    let need = eta * cells.len() as f64;
    let whole = (need.floor() as usize).min(cells.len());
    let frac = need - whole as f64;
    let partial = if frac > 0.0 && whole < cells.len() { Some((cells[whole], frac)) } else { None };
    cells.truncate(whole);
    FractionalSet { cells: CellSet::new(cells), partial }
}

/// `D^η_u = sup_Q sup { u(Q)/u(E) : E ⊆ Q, |E| ≥ η|Q| }`.
pub fn doubling_constant(u: &Weight, eta: f64, grids: &[Grid]) -> Result<ConstantReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Parameter(format!("eta = {eta} must lie in (0, 1]")));
    }
    sup_over_cubes(u, grids, ConstantKind::Doubling { eta }, Algorithm::Greedy, |g, q| {
        let (v, set) = doubling_on_cube(u, eta, g, q);
        (v, Some(set))
    })
}

/// Inner supremum of `D^η_u` on one cube, with the lightest admissible set.
pub fn doubling_on_cube(u: &Weight, eta: f64, grid: &Grid, q: &DyadicCube) -> (f64, FractionalSet) {
    let set = lightest_fill(u, grid, q, eta);
    (doubling_on_set(u, grid, q, &set), set)
}
