//! Experiment runners behind the `verify`, `sweep` and inspection commands.
//!
//! Random instances come from per-trial streams of the configured seed and
//! trials run in parallel with results collected in trial order, so a report
//! depends only on the config. Every report carries the checks that decide
//! the exit status.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;

use crate::config::{Config, FamilySpec};
use crate::constants::{
    ap_constant, ar_p_constant, ar_pq_constant, ar_pq_prime, doubling_constant, fujii_wilson, rh_constant,
    ConstantReport,
};
use crate::cz::{decompose, weighted_averages, CzDecomposition};
use crate::error::{Error, Result};
use crate::exponents::{conjugate, ExponentTuple};
use crate::function::{pairing, GridFunction, Weight};
use crate::grid::Grid;
use crate::harness::bounds::doubling_estimate;
use crate::harness::extremal::{extremal_search, restricted_weak_objective, MoveSet};
use crate::harness::ratios::{
    multiplier_weak_ratio, random_input, random_union, restricted_weak_ratio, strong_ratio, trial_rng, RatioReport,
    TestOperator,
};
use crate::harness::slope::scaling_slope;
use crate::lorentz::{level_set_candidates, lorentz_norms, weak_dual_estimate, weak_norm};
use crate::maximal::{dyadic_maximal, strong_bound_sides, strong_constant};
use crate::report::{Report, Value};
use crate::sparse::{bilinear_form, build_stopping_family, multiplier_eval, sparse_operator, SparseFamily};

/// Relative slack for inequalities with explicit constants.
pub const SLACK: f64 = 1e-10;
/// Relative tolerance for identities that hold up to rounding.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    /// strong type of the weighted fractional maximal operator
    FractionalMaximal,
    /// weak `(1, n/(n−α))` type of the same operator, constant 1
    WeakEndpoint,
    /// invariants of the weighted Calderón–Zygmund decomposition
    Cz,
    /// `[w]' ≤ [w]_{A^R_{p,q}} ≤ p [w]'`
    RestrictedBracket,
    /// the doubling estimate from the restricted constant
    Doubling,
    /// the dual weak-norm bracket `2^{-1/q} W ≤ estimate ≤ q' W`
    Dual,
    /// `‖f‖_{p,∞} ≤ ‖f‖_p ≤ ‖f‖_{p,1}`
    Lorentz,
    /// reverse Hölder self-improvement, reported only
    SelfImprovement,
    RestrictedWeak,
    MultiplierWeak,
    Strong,
}

const NAMES: &[(Experiment, &str, &[&str])] = &[
    (Experiment::FractionalMaximal, "fractional-maximal", &["prop2.7"]),
    (Experiment::WeakEndpoint, "weak-endpoint", &["prop2.7-endpoint", "weak11"]),
    (Experiment::Cz, "cz", &["czd"]),
    (Experiment::RestrictedBracket, "restricted-bracket", &["prop2.5"]),
    (Experiment::Doubling, "doubling", &[]),
    (Experiment::Dual, "dual", &[]),
    (Experiment::Lorentz, "lorentz", &[]),
    (Experiment::SelfImprovement, "self-improvement", &["prop2.6"]),
    (Experiment::RestrictedWeak, "restricted-weak", &["thm1.1"]),
    (Experiment::MultiplierWeak, "multiplier-weak", &["thm1.3", "multiplier-weak-inf", "multiplier-weak-fin"]),
    (Experiment::Strong, "strong", &["thma"]),
];

impl Experiment {
    pub fn all() -> Vec<Experiment> {
        NAMES.iter().map(|(e, _, _)| *e).collect()
    }

    pub fn name(&self) -> &'static str {
        NAMES.iter().find(|(e, _, _)| e == self).expect("every experiment is named").1
    }

    pub fn aliases(&self) -> &'static [&'static str] {
        NAMES.iter().find(|(e, _, _)| e == self).expect("every experiment is named").2
    }

    /// Operator-ratio experiments, the ones a sweep accepts.
    pub fn is_ratio(&self) -> bool {
        matches!(self, Experiment::RestrictedWeak | Experiment::MultiplierWeak | Experiment::Strong)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        NAMES
            .iter()
            .find(|(_, name, aliases)| *name == key || aliases.contains(&key.as_str()))
            .map(|(e, _, _)| *e)
            .ok_or_else(|| {
                let known: Vec<&str> = NAMES.iter().map(|(_, n, _)| *n).collect();
                Error::Parse(format!("unknown experiment `{s}`; known: {}", known.join(", ")))
            })
    }
}

fn header(title: &str, cfg: &Config, columns: &[&str]) -> Report {
    Report::new(title, &cfg.hash(), cfg.seed, columns)
}

fn require_trials(cfg: &Config) -> Result<usize> {
    if cfg.trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    Ok(cfg.trials)
}

/// Runs `f` for every trial in parallel, keeping trial order.
fn par_trials<T: Send>(trials: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..trials).into_par_iter().map(f).collect()
}

fn lognormal_weight(grid: &Grid, rng: &mut ChaCha8Rng) -> Weight {
    let d = LogNormal::new(0.0, 1.0).expect("valid lognormal");
    Weight::from_values(grid, (0..grid.cell_count()).map(|_| d.sample(rng)).collect()).expect("positive samples")
}

/// Trial `t`: a non-negative log-normal input (localized on odd trials), an
/// independent log-normal weight, and the stream for any further draws.
fn instance(grid: &Grid, seed: u64, t: usize) -> (GridFunction, Weight, ChaCha8Rng) {
    let mut rng = trial_rng(seed, t as u64);
    let f = random_input(grid, &mut rng, t);
    let u = lognormal_weight(grid, &mut rng);
    (f, u, rng)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// Runs one `verify` experiment.
pub fn verify(exp: Experiment, cfg: &Config) -> Result<Report> {
    match exp {
        Experiment::FractionalMaximal => fractional_maximal(cfg),
        Experiment::WeakEndpoint => weak_endpoint(cfg),
        Experiment::Cz => cz_suite(cfg),
        Experiment::RestrictedBracket => restricted_bracket(cfg),
        Experiment::Doubling => doubling(cfg),
        Experiment::Dual => dual(cfg),
        Experiment::Lorentz => lorentz(cfg),
        Experiment::SelfImprovement => self_improvement(cfg),
        Experiment::RestrictedWeak | Experiment::MultiplierWeak | Experiment::Strong => theorem_ratio(exp, cfg),
    }
}

fn fractional_maximal(cfg: &Config) -> Result<Report> {
    let grid = Grid::new(cfg.grid)?;
    let e = cfg.ar_exponents()?;
    let trials = require_trials(cfg)?;
    let sides = par_trials(trials, |t| {
        let (f, u, _) = instance(&grid, cfg.seed, t);
        strong_bound_sides(&f, &u, e.p, e.alpha, &grid)
    })?;
    let mut r = header("verify fractional-maximal", cfg, &["trial", "p", "q", "alpha", "lhs", "rhs", "ratio"]);
    let mut worst: f64 = 0.0;
    for (t, (lhs, rhs)) in sides.into_iter().enumerate() {
        let ratio = lhs / rhs;
        worst = worst.max(ratio);
        r.push(vec![t.into(), e.p.into(), e.q.into(), e.alpha.into(), lhs.into(), rhs.into(), ratio.into()]);
    }
    let c = strong_constant(e.p, e.q, e.alpha, grid.dim());
    r.check(
        "strong-bound",
        worst <= 1.0 + SLACK,
        format!("max ratio {worst:.12} over {trials} trials, constant {c:.12}"),
    );
    Ok(r)
}

fn weak_endpoint(cfg: &Config) -> Result<Report> {
    let grid = Grid::new(cfg.grid)?;
    let alpha = cfg.alpha.unwrap_or(0.0);
    let n = grid.dim() as f64;
    let trials = require_trials(cfg)?;
    let target = n / (n - alpha);
    let sides = par_trials(trials, |t| {
        let (f, u, _) = instance(&grid, cfg.seed, t);
        let m = dyadic_maximal(&f, &u, alpha, &grid)?;
        let lhs = weak_norm(&m, &u, target)?;
        let rhs = lorentz_norms(&f, &u, 1.0)?.strong;
        Ok((lhs, rhs))
    })?;
    let mut r = header("verify weak-endpoint", cfg, &["trial", "alpha", "target", "lhs", "rhs", "ratio"]);
    let mut worst: f64 = 0.0;
    for (t, (lhs, rhs)) in sides.into_iter().enumerate() {
        let ratio = lhs / rhs;
        worst = worst.max(ratio);
        r.push(vec![t.into(), alpha.into(), target.into(), lhs.into(), rhs.into(), ratio.into()]);
    }
    r.check("weak-bound", worst <= 1.0 + SLACK, format!("max ratio {worst:.12} over {trials} trials, constant 1"));
    Ok(r)
}

/// Invariants of one decomposition, as worst relative errors.
#[derive(Clone, Debug, PartialEq)]
pub struct CzStats {
    pub lambda: f64,
    pub members: usize,
    pub exact: bool,
    pub maximal: bool,
    /// `max_P |∫_P b du| / ∫_P h du`
    pub cancellation: f64,
    /// `|‖g‖_{L^1(u)} − ‖h‖_{L^1(u)}| / ‖h‖_{L^1(u)}`
    pub mass: f64,
    /// `λ u(Ω) / ‖h‖_{L^1(u)}`, at most 1
    pub measure: f64,
    /// `‖g‖_∞ / (D^{2^{-n}}_u λ)`, at most 1
    pub good: f64,
    /// worst relative gap of `∫_Q h du = ∫_Q g du` over cubes not strictly
    /// inside a member
    pub identity: f64,
}

pub fn cz_stats(d: &CzDecomposition, h: &GridFunction, u: &Weight, grid: &Grid) -> Result<CzStats> {
    let cell = grid.cell_measure();
    let norm = |f: &GridFunction| f.values().iter().zip(u.values()).map(|(a, b)| a.abs() * b * cell).sum::<f64>();
    let h_norm = norm(h);
    let cancellation = max_of(d.family.iter().map(|p| {
        let local = u.weighted_cube_integral(h, grid, p);
        d.bad_integral(u, grid, p).abs() / local
    }));
    let d_children = doubling_constant(u, (-(grid.dim() as f64)).exp2(), std::slice::from_ref(grid))?.value;

    let hu: Vec<f64> = h.values().iter().zip(u.values()).map(|(a, b)| a * b).collect();
    let gu: Vec<f64> = d.good.values().iter().zip(u.values()).map(|(a, b)| a * b).collect();
    let (hs, gs) = (grid.cube_sums(&hu), grid.cube_sums(&gu));
    let mut member = vec![false; grid.cube_count()];
    for p in &d.family {
        member[grid.cube_id(p)] = true;
    }
    // parents precede children in cube-id order
    let mut inside = vec![false; grid.cube_count()];
    let mut identity: f64 = 0.0;
    for id in 0..grid.cube_count() {
        if let Ok(parent) = grid.parent(&grid.cube_from_id(id)) {
            let pid = grid.cube_id(&parent);
            inside[id] = inside[pid] || member[pid];
        }
        if !inside[id] {
            let gap = (hs[id] - gs[id]).abs();
            identity = identity.max(if gap == 0.0 { 0.0 } else { gap / hs[id].abs() });
        }
    }
    Ok(CzStats {
        lambda: d.lambda,
        members: d.family.len(),
        exact: d.reconstructs_exactly(h),
        maximal: d.check_maximal(h, u, grid).is_ok(),
        cancellation,
        mass: (norm(&d.good) - h_norm).abs() / h_norm,
        measure: d.lambda * u.set_mass(&d.omega) / h_norm,
        good: d.good.max_abs() / (d_children * d.lambda),
        identity,
    })
}

/// Largest top-cube average of `h` with respect to `u`.
fn top_average(h: &GridFunction, u: &Weight, grid: &Grid) -> f64 {
    let avg = weighted_averages(h, u, grid);
    max_of(grid.top_cubes().iter().map(|q| avg[grid.cube_id(q)]))
}

fn cz_suite(cfg: &Config) -> Result<Report> {
    let grid = Grid::new(cfg.grid)?;
    let trials = require_trials(cfg)?;
    let stats = par_trials(trials, |t| {
        let (h, u, mut rng) = instance(&grid, cfg.seed, t);
        let lambda = top_average(&h, &u, &grid) * rng.random_range(1.0..8.0);
        let d = decompose(&h, &u, lambda, &grid)?;
        cz_stats(&d, &h, &u, &grid)
    })?;
    let mut r = header(
        "verify cz",
        cfg,
        &["trial", "lambda", "members", "exact", "maximal", "cancellation", "mass", "measure", "good", "identity"],
    );
    for (t, s) in stats.iter().enumerate() {
        r.push(vec![
            t.into(),
            s.lambda.into(),
            s.members.into(),
            if s.exact { "yes" } else { "no" }.into(),
            if s.maximal { "yes" } else { "no" }.into(),
            s.cancellation.into(),
            s.mass.into(),
            s.measure.into(),
            s.good.into(),
            s.identity.into(),
        ]);
    }
    let members: usize = stats.iter().map(|s| s.members).sum();
    r.note(format!("{members} maximal cubes over {trials} trials"));
    let count = |pred: &dyn Fn(&CzStats) -> bool| stats.iter().filter(|s| !pred(s)).count();
    let worst = |f: &dyn Fn(&CzStats) -> f64| max_of(stats.iter().map(f));
    r.check("exact-sum", count(&|s| s.exact) == 0, format!("g + b = h exactly; {} failing trials", count(&|s| s.exact)));
    r.check("maximal", count(&|s| s.maximal) == 0, format!("{} trials with a non-maximal member", count(&|s| s.maximal)));
    let c = worst(&|s| s.cancellation);
    r.check("cancellation", c <= EXACT_TOL, format!("max relative |int_P b du| {c:.3e}"));
    let m = worst(&|s| s.mass);
    r.check("mass", m <= EXACT_TOL, format!("max relative mass gap {m:.3e}"));
    let o = worst(&|s| s.measure);
    r.check("measure", o <= 1.0 + EXACT_TOL, format!("max lambda u(Omega)/|h|_1 {o:.12}"));
    let g = worst(&|s| s.good);
    r.check("good-bound", g <= 1.0 + EXACT_TOL, format!("max |g|_inf/(D lambda) {g:.12}"));
    let i = worst(&|s| s.identity);
    r.check("cube-identity", i <= EXACT_TOL, format!("max relative gap {i:.3e}"));
    Ok(r)
}

fn restricted_bracket(cfg: &Config) -> Result<Report> {
    let grid = Grid::new(cfg.grid)?;
    let grids = std::slice::from_ref(&grid);
    let e = cfg.ar_exponents()?;
    let trials = require_trials(cfg)?;
    let values = par_trials(trials, |t| {
        let (_, w, _) = instance(&grid, cfg.seed, t);
        Ok((ar_pq_prime(&w, &e, grids)?.value, ar_pq_constant(&w, &e, grids)?.value))
    })?;
    let mut r = header("verify restricted-bracket", cfg, &["trial", "p", "q", "alpha", "prime", "restricted", "ratio"]);
    let (mut low, mut high) = (f64::INFINITY, 0.0f64);
    for (t, (prime, full)) in values.into_iter().enumerate() {
        let ratio = full / prime;
        low = low.min(ratio);
        high = high.max(ratio);
        r.push(vec![t.into(), e.p.into(), e.q.into(), e.alpha.into(), prime.into(), full.into(), ratio.into()]);
    }
    r.check("lower", low >= 1.0 - EXACT_TOL, format!("min restricted/prime {low:.12}"));
    r.check("upper", high <= e.p * (1.0 + EXACT_TOL), format!("max restricted/prime {high:.12}, factor p = {}", e.p));
    Ok(r)
}

fn eta_ladder(cfg: &Config, n: usize) -> Vec<f64> {
    let mut etas = vec![(-(n as f64)).exp2(), 0.5, 1.0];
    etas.extend(cfg.eta);
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    etas
}

fn doubling(cfg: &Config) -> Result<Report> {
    let grids = Grid::all_shifts(cfg.grid.dim, cfg.grid.depth)?;
    let e = cfg.exponents()?;
    let trials = require_trials(cfg)?;
    let etas = eta_ladder(cfg, e.n);
    let rows = par_trials(trials, |t| {
        let (_, w, _) = instance(&grids[0], cfg.seed, t);
        let k = ar_pq_constant(&w.pow(e.p0)?, &e.restricted_class(), &grids)?.value;
        let wq = w.pow(e.q)?;
        etas.iter()
            .map(|&eta| Ok((eta, doubling_constant(&wq, eta, &grids)?.value, k, doubling_estimate(k, &e, eta))))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut r = header("verify doubling", cfg, &["trial", "eta", "doubling", "restricted", "estimate", "ratio"]);
    let mut worst: f64 = 0.0;
    for (t, per_eta) in rows.into_iter().enumerate() {
        for (eta, d, k, est) in per_eta {
            worst = worst.max(d / est);
            r.push(vec![t.into(), eta.into(), d.into(), k.into(), est.into(), (d / est).into()]);
        }
    }
    r.note(format!("{e}; {} shifted grids", grids.len()));
    r.check("doubling-bound", worst <= 1.0 + EXACT_TOL, format!("max doubling/estimate {worst:.12}"));
    Ok(r)
}

fn dual(cfg: &Config) -> Result<Report> {
    let grid = Grid::new(cfg.grid)?;
    let q = cfg.exponents()?.q;
    let trials = require_trials(cfg)?;
    let values = par_trials(trials, |t| {
        let (h, w, _) = instance(&grid, cfg.seed, t);
        let exact = weak_norm(&h, &w.pow(q)?, q)?;
        let est = weak_dual_estimate(&h, &w, q, &level_set_candidates(&h))?.value;
        Ok((exact, est))
    })?;
    let mut r = header("verify dual", cfg, &["trial", "q", "weak", "estimate", "ratio"]);
    let (mut low, mut high) = (f64::INFINITY, 0.0f64);
    for (t, (exact, est)) in values.into_iter().enumerate() {
        let ratio = est / exact;
        low = low.min(ratio);
        high = high.max(ratio);
        r.push(vec![t.into(), q.into(), exact.into(), est.into(), ratio.into()]);
    }
    let (lo_c, hi_c) = ((-1.0 / q).exp2(), conjugate(q));
    r.check("lower", low >= lo_c * (1.0 - EXACT_TOL), format!("min estimate/weak {low:.12} vs {lo_c:.12}"));
    r.check("upper", high <= hi_c * (1.0 + EXACT_TOL), format!("max estimate/weak {high:.12} vs {hi_c:.12}"));
    Ok(r)
}

fn lorentz(cfg: &Config) -> Result<Report> {
    let grid = Grid::new(cfg.grid)?;
    let trials = require_trials(cfg)?;
    let values = par_trials(trials, |t| {
        let (f, u, mut rng) = instance(&grid, cfg.seed, t);
        let signed: Vec<f64> =
            f.values().iter().map(|v| if rng.random_bool(0.5) { -v } else { *v }).collect();
        let p = rng.random_range(1.0..4.0);
        Ok((p, lorentz_norms(&GridFunction::from_values(&grid, signed)?, &u, p)?))
    })?;
    let mut r = header("verify lorentz", cfg, &["trial", "p", "weak", "strong", "one"]);
    let (mut first, mut second) = (0.0f64, 0.0f64);
    for (t, (p, n)) in values.into_iter().enumerate() {
        first = first.max(n.weak / n.strong);
        second = second.max(n.strong / n.one);
        r.push(vec![t.into(), p.into(), n.weak.into(), n.strong.into(), n.one.into()]);
    }
    r.check("weak-le-strong", first <= 1.0 + EXACT_TOL, format!("max weak/strong {first:.12}"));
    r.check("strong-le-one", second <= 1.0 + EXACT_TOL, format!("max strong/one {second:.12}"));
    Ok(r)
}

const SELF_C: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
const SELF_D: [f64; 5] = [0.125, 0.25, 0.5, 1.0, 2.0];

fn self_improvement(cfg: &Config) -> Result<Report> {
    let grid = Grid::new(cfg.grid)?;
    let grids = std::slice::from_ref(&grid);
    let s = cfg.s;
    if !(s > 1.0 && s.is_finite()) {
        return Err(Error::Parameter(format!("self-improvement needs 1 < s < inf, got s={s}")));
    }
    let trials = require_trials(cfg)?;
    let rows = par_trials(trials, |t| {
        let (_, w, _) = instance(&grid, cfg.seed, t);
        let base = rh_constant(&w, s, grids)?.value;
        let a_inf = fujii_wilson(&w, grids)?.value;
        let mut out = Vec::new();
        for c in SELF_C {
            let v = s + (s - 1.0) / (c * s * base.powf(s));
            out.push(("rh", c, v, rh_constant(&w, v, grids)?.value, base));
        }
        for d in SELF_D {
            let v = 1.0 + d / a_inf;
            out.push(("a-inf", d, v, rh_constant(&w, v, grids)?.value, a_inf));
        }
        Ok(out)
    })?;
    let mut r = header("verify self-improvement", cfg, &["trial", "part", "param", "v", "rh_v", "baseline", "ratio"]);
    let mut worst_c = [0.0f64; SELF_C.len()];
    let mut worst_d = [0.0f64; SELF_D.len()];
    for (t, out) in rows.into_iter().enumerate() {
        for (i, (part, param, v, rh_v, baseline)) in out.into_iter().enumerate() {
            let ratio = if part == "rh" { rh_v / baseline } else { rh_v };
            if part == "rh" {
                worst_c[i] = worst_c[i].max(ratio);
            } else {
                worst_d[i - SELF_C.len()] = worst_d[i - SELF_C.len()].max(ratio);
            }
            r.push(vec![t.into(), part.into(), param.into(), v.into(), rh_v.into(), baseline.into(), ratio.into()]);
        }
    }
    let c = SELF_C.iter().zip(&worst_c).find(|(_, w)| **w <= 2.0).map(|(c, _)| *c);
    let d = SELF_D.iter().zip(&worst_d).filter(|(_, w)| **w <= 2.0).map(|(d, _)| *d).next_back();
    r.note(format!("smallest c with RH_v <= 2 RH_s on every trial: {}", c.map_or("none".into(), |c| c.to_string())));
    r.note(format!("largest d with RH_v <= 2 on every trial: {}", d.map_or("none".into(), |d| d.to_string())));
    Ok(r)
}

fn ratio_columns(prefix: &[&str], rep: &RatioReport) -> Vec<String> {
    let mut cols: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    cols.extend(["theorem", "p0", "q0", "p", "q", "alpha", "eta"].map(String::from));
    cols.extend(rep.bound.factors.iter().map(|f| f.name.clone()));
    if rep.bound.theta.is_some() {
        cols.push("theta".into());
    }
    cols.extend(["empirical", "bound", "ratio", "witness", "trials", "seed"].map(String::from));
    cols
}

fn ratio_row(prefix: Vec<Value>, rep: &RatioReport, eta: f64) -> Vec<Value> {
    let e = &rep.bound.exponents;
    let mut row = prefix;
    row.extend([rep.id.name().into(), e.p0.into(), e.q0.into(), e.p.into(), e.q.into(), e.alpha.into(), eta.into()]);
    row.extend(rep.bound.factors.iter().map(|f| Value::from(f.value)));
    if let Some(t) = rep.bound.theta {
        row.push(t.into());
    }
    row.extend([
        rep.empirical.into(),
        rep.bound.value.into(),
        rep.ratio.into(),
        rep.witness.clone().into(),
        rep.trials.into(),
        rep.seed.into(),
    ]);
    row
}

/// One ratio measurement for `w` with the stopping test operator of `w`.
pub fn measure_ratio(exp: Experiment, cfg: &Config, w: &Weight, e: &ExponentTuple, grids: &[Grid]) -> Result<RatioReport> {
    let trials = require_trials(cfg)?;
    let op = TestOperator::stopping(e, w, grids.to_vec(), cfg.rho, cfg.sparse_eta())?;
    match exp {
        Experiment::RestrictedWeak => restricted_weak_ratio(&op, w, e, trials, cfg.seed),
        Experiment::MultiplierWeak => multiplier_weak_ratio(&op, w, e, trials, cfg.seed),
        Experiment::Strong => strong_ratio(&op, w, e, trials, cfg.seed),
        other => Err(Error::Parameter(format!("`{other}` is not an operator ratio"))),
    }
}

fn theorem_ratio(exp: Experiment, cfg: &Config) -> Result<Report> {
    let grids = Grid::all_shifts(cfg.grid.dim, cfg.grid.depth)?;
    let e = cfg.exponents()?;
    let w = cfg.weight.weight(&grids[0])?;
    let rep = measure_ratio(exp, cfg, &w, &e, &grids)?;
    let cols = ratio_columns(&[], &rep);
    let mut r = Report::new(&format!("verify {exp}"), &cfg.hash(), cfg.seed, &cols.iter().map(String::as_str).collect::<Vec<_>>());
    r.push(ratio_row(Vec::new(), &rep, cfg.sparse_eta()));
    r.note(format!("weight {}; {} shifted grids", cfg.weight, grids.len()));
    r.check(
        "finite",
        rep.ratio.is_finite() && rep.ratio > 0.0,
        format!("ratio {:.12} = {:.12} / {:.12}", rep.ratio, rep.empirical, rep.bound.value),
    );
    Ok(r)
}

/// Ratio of `exp` along the power-weight family of the config, with the
/// least-squares slope of `log empirical` against `log bound`.
pub fn sweep(exp: Experiment, cfg: &Config) -> Result<Report> {
    if !exp.is_ratio() {
        return Err(Error::Parameter(format!("sweep needs an operator ratio, got `{exp}`")));
    }
    let family = FamilySpec::parse(&cfg.family)?;
    let grids = Grid::all_shifts(cfg.grid.dim, cfg.grid.depth)?;
    let e = cfg.exponents()?;
    let mut reports = Vec::new();
    for (a, spec) in family.exponents().into_iter().zip(family.members()) {
        let w = spec.weight(&grids[0])?;
        reports.push((a, measure_ratio(exp, cfg, &w, &e, &grids)?));
    }
    let cols = ratio_columns(&["a"], &reports[0].1);
    let mut r = Report::new(&format!("sweep {exp}"), &cfg.hash(), cfg.seed, &cols.iter().map(String::as_str).collect::<Vec<_>>());
    for (a, rep) in &reports {
        r.push(ratio_row(vec![(*a).into()], rep, cfg.sparse_eta()));
    }
    let finite = reports.iter().all(|(_, rep)| rep.ratio.is_finite() && rep.ratio > 0.0);
    let worst = max_of(reports.iter().map(|(_, rep)| rep.ratio));
    r.check("finite", finite, format!("{} members, max ratio {worst:.12}", reports.len()));
    let points: Vec<(f64, f64)> = reports.iter().map(|(_, rep)| (rep.bound.value, rep.empirical)).collect();
    match scaling_slope(&points) {
        Ok(fit) => {
            r.note(format!("slope {:.6} intercept {:.6} r2 {:.6} over {} members", fit.slope, fit.intercept, fit.r2, fit.points));
            r.check("slope", fit.slope <= 1.0 + cfg.tol, format!("slope {:.6} vs 1 + tol = {}", fit.slope, 1.0 + cfg.tol));
        }
        Err(err) => r.check("slope", false, err.to_string()),
    }
    Ok(r)
}

/// Every weight constant of the configured weight over the `3^n` shifted
/// grids. `D` uses `eta` when given, otherwise `η = 1`.
pub fn constants_report(cfg: &Config) -> Result<Report> {
    let grids = Grid::all_shifts(cfg.grid.dim, cfg.grid.depth)?;
    let w = cfg.weight.weight(&grids[0])?;
    let ar = cfg.ar_exponents()?;
    let eta = cfg.eta.unwrap_or(1.0);
    let reports: Vec<ConstantReport> = vec![
        ap_constant(&w, cfg.p, &grids)?,
        fujii_wilson(&w, &grids)?,
        rh_constant(&w, cfg.s, &grids)?,
        ar_p_constant(&w, cfg.p, &grids)?,
        ar_pq_constant(&w, &ar, &grids)?,
        ar_pq_prime(&w, &ar, &grids)?,
        doubling_constant(&w, eta, &grids)?,
    ];
    let mut r = header("constants", cfg, &["constant", "value", "algorithm", "depth", "witness"]);
    let mut worst: f64 = 0.0;
    for rep in &reports {
        let again = rep.reevaluate(&w)?;
        worst = worst.max((again - rep.value).abs() / rep.value);
        r.push(vec![
            rep.kind.to_string().into(),
            rep.value.into(),
            rep.algorithm.to_string().into(),
            rep.depth.into(),
            rep.witness_label().into(),
        ]);
    }
    r.note(format!("weight {} over {} shifted grids", cfg.weight, grids.len()));
    r.check("witness", worst <= EXACT_TOL, format!("max relative re-evaluation gap {worst:.3e}"));
    Ok(r)
}

/// The decomposition of the configured input at `lambda`, or at twice the
/// largest top-cube average when `lambda` is unset.
pub fn czd_report(cfg: &Config) -> Result<Report> {
    let grid = Grid::new(cfg.grid)?;
    let h = cfg.input.synthesize(&grid)?;
    let u = cfg.weight.weight(&grid)?;
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => {
            let top = top_average(&h, &u, &grid);
            if top == 0.0 {
                return Err(Error::Degenerate);
            }
            2.0 * top
        }
    };
    let d = decompose(&h, &u, lambda, &grid)?;
    let stats = cz_stats(&d, &h, &u, &grid)?;
    let mut label = vec![String::from("-"); grid.cell_count()];
    for p in &d.family {
        let index: Vec<String> = p.index[..grid.dim()].iter().map(|i| i.to_string()).collect();
        let name = format!("{}:{}", p.level, index.join(":"));
        for c in grid.cells(p) {
            label[c] = name.clone();
        }
    }
    let mut r = header("czd", cfg, &["cell", "h", "weight", "good", "bad", "member"]);
    let bad = d.bad_rounded();
    for (c, name) in label.into_iter().enumerate() {
        r.push(vec![
            c.into(),
            h.values()[c].into(),
            u.values()[c].into(),
            d.good.values()[c].into(),
            bad.values()[c].into(),
            name.into(),
        ]);
    }
    r.note(format!("lambda {lambda:.16e}; {} maximal cubes; u(Omega) {:.16e}", d.family.len(), u.set_mass(&d.omega)));
    r.check("exact-sum", stats.exact, "g + b = h exactly".into());
    r.check("maximal", stats.maximal, "members disjoint, parents at most lambda".into());
    r.check("cancellation", stats.cancellation <= EXACT_TOL, format!("max relative {:.3e}", stats.cancellation));
    r.check("good-bound", stats.good <= 1.0 + EXACT_TOL, format!("|g|_inf/(D lambda) {:.12}", stats.good));
    Ok(r)
}

/// Sparse operator and multiplier composition of the configured input. The
/// family is the stopping family of `|f|` unless one is supplied.
pub fn sparse_eval_report(cfg: &Config, family: Option<SparseFamily>) -> Result<(Report, SparseFamily)> {
    let grid = Grid::new(cfg.grid)?;
    let f = cfg.input.synthesize(&grid)?;
    let w = cfg.weight.weight(&grid)?;
    let alpha = cfg.alpha.unwrap_or(0.0);
    let s = match family {
        Some(s) => s,
        None => build_stopping_family(&f.abs(), cfg.p0, &grid, cfg.rho)?,
    };
    let valid = s.validate(&grid);
    let tf = sparse_operator(&s, &f, alpha, &grid)?;
    let mult = multiplier_eval(&s, &f, &w, alpha, &grid)?;
    let mut r = header("sparse-eval", cfg, &["cell", "f", "sparse", "multiplier"]);
    for c in 0..grid.cell_count() {
        r.push(vec![c.into(), f.values()[c].into(), tf.values()[c].into(), mult.values()[c].into()]);
    }
    r.note(format!("{} members, declared eta {}, measured eta {}", s.len(), s.eta, s.measured_eta(&grid)));
    r.check("sparse", valid.is_ok(), valid.as_ref().map_or_else(|v| v.to_string(), |_| "family is valid".into()));
    let e = ExponentTuple::with_alpha(grid.dim(), 1.0, f64::INFINITY, cfg.p, alpha)?;
    let g = w.as_function();
    let lhs = pairing(&tf, g)?;
    let rhs = bilinear_form(std::slice::from_ref(&s), &f, g, &e, std::slice::from_ref(&grid))?;
    r.check("domination", lhs <= rhs * (1.0 + EXACT_TOL), format!("<Tf, w> = {lhs:.12} vs form {rhs:.12}"));
    Ok((r, s))
}

/// The dyadic fractional maximal function of the configured input.
pub fn maximal_report(cfg: &Config) -> Result<Report> {
    let grid = Grid::new(cfg.grid)?;
    let f = cfg.input.synthesize(&grid)?;
    let u = cfg.weight.weight(&grid)?;
    let alpha = cfg.alpha.unwrap_or(0.0);
    let m = dyadic_maximal(&f, &u, alpha, &grid)?;
    let mut r = header("maximal", cfg, &["cell", "f", "maximal"]);
    for c in 0..grid.cell_count() {
        r.push(vec![c.into(), f.values()[c].into(), m.values()[c].into()]);
    }
    let n = grid.dim() as f64;
    let weak = weak_norm(&m, &u, n / (n - alpha))?;
    let l1 = lorentz_norms(&f, &u, 1.0)?.strong;
    r.check("weak-bound", weak <= l1 * (1.0 + SLACK), format!("{weak:.12} vs {l1:.12}"));
    if cfg.p > 1.0 && (alpha == 0.0 || cfg.p <= n / alpha) {
        let (lhs, rhs) = strong_bound_sides(&f, &u, cfg.p, alpha, &grid)?;
        r.check("strong-bound", lhs <= rhs * (1.0 + SLACK), format!("{lhs:.12} vs {rhs:.12}"));
    }
    Ok(r)
}

/// Hill climbing on the restricted weak ratio from the configured weight,
/// with the test operator held fixed.
pub fn extremal_report(cfg: &Config) -> Result<Report> {
    let grids = Grid::all_shifts(cfg.grid.dim, cfg.grid.depth)?;
    let e = cfg.exponents()?;
    let w = cfg.weight.weight(&grids[0])?;
    let op = TestOperator::stopping(&e, &w, grids.clone(), cfg.rho, cfg.sparse_eta())?;
    let start = random_union(&grids[0], &mut trial_rng(cfg.seed, 1));
    let moves = MoveSet { step: cfg.step, ..MoveSet::default() };
    let rep = extremal_search(&grids[0], restricted_weak_objective(&op, &e), w, start, cfg.seed, cfg.iterations, moves)?;
    let mut r = header("extremal", cfg, &["initial", "best", "accepted", "iterations", "set_cells", "seed"]);
    r.push(vec![
        rep.initial.into(),
        rep.best.into(),
        rep.accepted.into(),
        rep.iterations.into(),
        rep.set.len().into(),
        rep.seed.into(),
    ]);
    r.check("monotone", rep.best >= rep.initial, format!("best {:.12} from {:.12}", rep.best, rep.initial));
    Ok(r)
}
