//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p dyadic-lab --test acceptance`.

// negated comparisons let NaN fail every check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::ToPrimitive;

use dyadic_lab::config::{Config, RawConfig};
use dyadic_lab::constants::{ar_pq_constant, ar_pq_on_cube, ar_pq_prime, ar_pq_prime_on_cube, doubling_constant, doubling_on_cube};
use dyadic_lab::cz::decompose;
use dyadic_lab::experiments::{self, Experiment};
use dyadic_lab::exponents::{ArExponents, ExponentTuple};
use dyadic_lab::function::{CellSet, GridFunction, Weight};
use dyadic_lab::grid::Grid;
use dyadic_lab::lorentz::{dual_inner_min, level_set_candidates, lorentz_norms, weak_dual_estimate, weak_norm};
use dyadic_lab::maximal::dyadic_maximal;

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn lib<T>(r: dyadic_lab::error::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn config(pairs: &[(&str, &str)]) -> Config {
    let mut raw = RawConfig::new();
    for (k, v) in pairs {
        raw.set(k, v).unwrap();
    }
    Config::from_raw(raw).unwrap()
}

fn conj(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Log-normal `f` (zero outside a random interval on odd trials) and weight.
fn instance_1d(seed: u64, t: u64, depth: u32) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed * 1_000_003 + t);
    let cells = 1usize << depth;
    let mut f = lognormal(&mut r, cells, 1.0);
    if t % 2 == 1 {
        let a = rand::Rng::random_range(&mut r, 0..cells);
        let b = rand::Rng::random_range(&mut r, a + 1..=cells);
        for (c, v) in f.iter_mut().enumerate() {
            if c < a || c >= b {
                *v = 0.0;
            }
        }
    }
    (f, lognormal(&mut r, cells, 1.0))
}

fn criterion_1() -> Outcome {
    let depth = 10;
    let grid = Grid::standard(1, depth).unwrap();
    let cell = grid.cell_measure();
    let mut details = Vec::new();
    for (p, q, alpha) in [(2.0, 2.0, 0.0), (2.0, 4.0, 0.25)] {
        let c = (1.0 + conj(p) / q).powf(1.0 - alpha);
        let mut worst: f64 = 0.0;
        for t in 0..200 {
            let (f, u) = instance_1d(1, t, depth);
            let m = maximal_1d(&f, &u, alpha, depth);
            let got = lib(dyadic_maximal(
                &GridFunction::from_values(&grid, f.clone()).unwrap(),
                &Weight::from_values(&grid, u.clone()).unwrap(),
                alpha,
                &grid,
            ))?;
            let gap = m.iter().zip(got.values()).map(|(a, b)| rel_gap(*a, *b)).fold(0.0, f64::max);
            ensure!(gap <= 1e-12, "trial {t}: maximal function differs from enumeration by {gap:e}");
            worst = worst.max(lp(&m, &u, cell, q) / (c * lp(&f, &u, cell, p)));
        }
        ensure!(worst <= 1.0 + 1e-10, "(p,q,alpha)=({p},{q},{alpha}): ratio {worst}");
        details.push(format!("(p,q,alpha)=({p},{q},{alpha}) max ratio {worst:.6} of constant {c:.6}"));
        let cfg = config(&[("grid", "n=1,L=10"), ("trials", "200"), ("p", &p.to_string()), ("q", &q.to_string())]);
        let r = lib(experiments::verify(Experiment::FractionalMaximal, &cfg))?;
        ensure!(r.pass(), "library run failed: {:?}", r.summary());
    }
    Ok(details.join("; "))
}

fn criterion_2() -> Outcome {
    let depth = 10;
    let cell = 1.0 / (1u64 << depth) as f64;
    let mut worst: f64 = 0.0;
    for t in 0..200 {
        let (f, u) = instance_1d(1, t, depth);
        let m = maximal_1d(&f, &u, 0.0, depth);
        worst = worst.max(weak(&m, &u, cell, 1.0) / lp(&f, &u, cell, 1.0));
    }
    ensure!(worst <= 1.0 + 1e-10, "max ratio {worst}");
    let cfg = config(&[("grid", "n=1,L=10"), ("trials", "200")]);
    let r = lib(experiments::verify(Experiment::WeakEndpoint, &cfg))?;
    ensure!(r.pass(), "library run failed: {:?}", r.summary());
    Ok(format!("max weak/L1 ratio {worst:.6} over 200 instances"))
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn criterion_3() -> Outcome {
    let depth = 8;
    let grid = Grid::standard(1, depth).unwrap();
    let cell = grid.cell_measure();
    let zero = exact(0.0);
    let mut members = 0;
    for t in 0..100 {
        let (h, u) = instance_1d(3, t, depth);
        let mut r = rng(300 + t);
        let root = h.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / u.iter().sum::<f64>();
        let lambda = root * rand::Rng::random_range(&mut r, 1.0..8.0);
        let hf = GridFunction::from_values(&grid, h.clone()).unwrap();
        let uw = Weight::from_values(&grid, u.clone()).unwrap();
        let d = lib(decompose(&hf, &uw, lambda, &grid))?;
        members += d.family.len();

        let family: Vec<(u32, usize)> = d.family.iter().map(|p| (p.level, p.index[0] as usize)).collect();
        ensure!(family == cz_family_1d(&h, &u, lambda, depth), "trial {t}: family differs from top-down search");

        let (g, b, e) = (d.good.values(), d.bad.values(), d.bad_error.values());
        for c in 0..h.len() {
            ensure!(exact(g[c]) + exact(b[c]) + exact(e[c]) == exact(h[c]), "trial {t} cell {c}: g + b != h");
        }
        ensure!(d.reconstructs_exactly(&hf), "trial {t}: library exactness check disagrees");

        let norm = |v: &[f64]| v.iter().zip(&u).map(|(a, w)| a * w * cell).sum::<f64>();
        let h_norm = norm(&h);
        ensure!(rel_gap(norm(g), h_norm) <= 1e-12, "trial {t}: mass not preserved");
        let omega: f64 = d.omega.cells().iter().map(|&c| u[c] * cell).sum();
        ensure!(omega <= h_norm / lambda * (1.0 + 1e-12), "trial {t}: u(Omega) = {omega} > |h|/lambda");

        let d2 = lib(doubling_constant(&uw, 0.5, std::slice::from_ref(&grid)))?.value;
        for p in &d.family {
            let size = 1usize << (depth - p.level);
            let start = p.index[0] as usize * size;
            let cells = start..start + size;
            let local: f64 = cells.clone().map(|c| h[c] * u[c] * cell).sum();
            let residual: BigRational = cells
                .clone()
                .map(|c| (exact(b[c]) + exact(e[c])) * exact(u[c]))
                .fold(zero.clone(), |a, x| a + x);
            let residual = residual.to_f64().unwrap().abs() * cell;
            ensure!(residual <= 1e-12 * local, "trial {t}: int_P b du = {residual} vs mass {local}");
            let parent_start = start / (2 * size) * (2 * size);
            let up: f64 = (parent_start..parent_start + 2 * size).map(|c| u[c]).sum();
            let own: f64 = cells.map(|c| u[c]).sum();
            ensure!(g[start] <= up / own * lambda * (1.0 + 1e-12), "trial {t}: member average above u(P^)/u(P) lambda");
            ensure!(up / own <= d2 * (1.0 + 1e-12), "trial {t}: doubling constant below a parent ratio");
        }
        let sup = g.iter().copied().fold(0.0, f64::max);
        ensure!(sup <= d2 * lambda * (1.0 + 1e-12), "trial {t}: |g|_inf = {sup} > D lambda = {}", d2 * lambda);

        for k in 0..=depth {
            let size = 1usize << (depth - k);
            for j in 0..1usize << k {
                let inside = family.iter().any(|&(l, i)| l < k && j >> (k - l) == i);
                if inside {
                    continue;
                }
                let cells = j * size..(j + 1) * size;
                let hq: f64 = cells.clone().map(|c| h[c] * u[c]).sum();
                let gq: f64 = cells.map(|c| g[c] * u[c]).sum();
                ensure!(rel_gap(hq, gq) <= 1e-12, "trial {t}: cube ({k},{j}) loses mass");
            }
        }
    }
    for grid in ["n=1,L=8", "n=1,L=8,a=1", "n=2,L=4,a=2:0"] {
        let cfg = config(&[("grid", grid), ("trials", "100"), ("seed", "3")]);
        let r = lib(experiments::verify(Experiment::Cz, &cfg))?;
        ensure!(r.pass(), "library suite on {grid}: {:?}", r.summary());
    }
    Ok(format!("100 instances, {members} maximal cubes, all six properties hold"))
}

fn exponent_pairs() -> [(f64, f64); 5] {
    [(2.0, 2.0), (1.5, 3.0), (1.0, 2.0), (3.0, 6.0), (1.0, 1.0)]
}

fn small_grids() -> Vec<Grid> {
    let mut out = Vec::new();
    for (n, depths) in [(1, 0..=3), (2, 0..=1), (3, 0..=1)] {
        for depth in depths {
            out.extend(Grid::all_shifts(n, depth).unwrap());
        }
    }
    out
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    for (gi, grid) in small_grids().into_iter().filter(|g| g.depth() > 0).enumerate() {
        let n = grid.dim();
        for trial in 0..5 {
            let mut r = rng(400 + 10 * gi as u64 + trial);
            let w = lognormal(&mut r, grid.cell_count(), 1.0);
            let weight = Weight::from_values(&grid, w.clone()).unwrap();
            for (p, q) in exponent_pairs() {
                let alpha = n as f64 * (1.0 / p - 1.0 / q);
                let e = ArExponents::new(p, q, alpha);
                for cube in grid.cubes() {
                    let vals: Vec<f64> = grid.cells(&cube).map(|c| w[c]).collect();
                    let full = ar_pq_brute(&vals, grid.cell_measure(), p, q, alpha, n);
                    let prime = ar_pq_prime_direct(&vals, grid.cell_measure(), p, q, alpha, n);
                    ensure!(prime <= full * (1.0 + 1e-12) && full <= p * prime * (1.0 + 1e-12), "oracle bracket fails");
                    let lib_full = lib(ar_pq_on_cube(&weight, &e, &grid, &cube))?.0;
                    let lib_prime = lib(ar_pq_prime_on_cube(&weight, &e, &grid, &cube))?;
                    ensure!(rel_gap(full, lib_full) <= 1e-12, "{}: restricted {full} vs {lib_full}", grid.spec());
                    ensure!(rel_gap(prime, lib_prime) <= 1e-12, "{}: prime {prime} vs {lib_prime}", grid.spec());
                    checked += 1;
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (grid, tag) in [("n=1,L=6", 0u64), ("n=2,L=3", 1)] {
        let grid = Grid::new(grid.parse().unwrap()).unwrap();
        for t in 0..100 {
            let w = lognormal(&mut rng(4000 + 1000 * tag + t), grid.cell_count(), 1.0);
            let weight = Weight::from_values(&grid, w).unwrap();
            for (p, q) in exponent_pairs() {
                let e = ArExponents::new(p, q, grid.dim() as f64 * (1.0 / p - 1.0 / q));
                let g = std::slice::from_ref(&grid);
                let prime = lib(ar_pq_prime(&weight, &e, g))?.value;
                let full = lib(ar_pq_constant(&weight, &e, g))?.value;
                ensure!(prime <= full * (1.0 + 1e-12), "lower end fails: {prime} > {full}");
                ensure!(full <= p * prime * (1.0 + 1e-12), "upper end fails: {full} > {p} * {prime}");
                worst = worst.max(full / (p * prime));
            }
        }
    }
    Ok(format!("{checked} cube checks against the subset oracle; 200 weights, max [w]/(p[w]') {worst:.6}"))
}

fn criterion_5() -> Outcome {
    let ladder = [(1.0, f64::INFINITY, 2.0, 2.0), (1.0, f64::INFINITY, 1.5, 3.0), (1.0, 4.0, 2.0, 2.0), (1.0, 8.0, 2.0, 4.0), (2.0, f64::INFINITY, 3.0, 3.0)];
    let grids = Grid::all_shifts(1, 6).unwrap();
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let w = lognormal(&mut rng(500 + t), grids[0].cell_count(), 1.0);
        let weight = Weight::from_values(&grids[0], w).unwrap();
        for &(p0, q0, p, q) in &ladder {
            let e = lib(ExponentTuple::with_q(1, p0, q0, p, q))?;
            let q0c = conj(q0);
            let class = ArExponents::new(p / p0, q / p0, p0 * e.alpha / q0c);
            let k = lib(ar_pq_constant(&lib(weight.pow(p0))?, &class, &grids))?.value;
            let wq = lib(weight.pow(q))?;
            for eta in [0.25, 0.5, 0.75, 1.0] {
                let d = lib(doubling_constant(&wq, eta, &grids))?.value;
                let bound = k.powf(q / p0) * eta.powf(-(q / p0 - e.alpha * q / q0c));
                ensure!(d <= bound * (1.0 + 1e-12), "{e} eta {eta}: D = {d} > {bound}");
                worst = worst.max(d / bound);
            }
        }
    }
    let cfg = config(&[("grid", "n=1,L=6"), ("trials", "20"), ("q0", "4")]);
    ensure!(lib(experiments::verify(Experiment::Doubling, &cfg))?.pass(), "library doubling run failed");
    Ok(format!("100 weights x 5 tuples x 4 eta, max D/bound {worst:.6}"))
}

fn criterion_6() -> Outcome {
    let mut checked = 0;
    for (gi, grid) in small_grids().into_iter().enumerate() {
        let n = grid.dim();
        let cell = grid.cell_measure();
        for trial in 0..6 {
            let mut r = rng(600 + 10 * gi as u64 + trial);
            let w = lognormal(&mut r, grid.cell_count(), 1.0);
            let h = sparse_nonnegative(&mut r, grid.cell_count());
            let weight = Weight::from_values(&grid, w.clone()).unwrap();
            let hf = GridFunction::from_values(&grid, h.clone()).unwrap();
            for cube in grid.cubes() {
                let cells: Vec<usize> = grid.cells(&cube).collect();
                let wv: Vec<f64> = cells.iter().map(|&c| w[c]).collect();
                let hv: Vec<f64> = cells.iter().map(|&c| h[c]).collect();
                for (p, q) in exponent_pairs() {
                    let alpha = n as f64 * (1.0 / p - 1.0 / q);
                    let greedy = lib(ar_pq_on_cube(&weight, &ArExponents::new(p, q, alpha), &grid, &cube))?.0;
                    let brute = ar_pq_brute(&wv, cell, p, q, alpha, n);
                    ensure!(rel_gap(greedy, brute) <= 1e-12, "{} restricted: {greedy} vs {brute}", grid.spec());
                }
                for eta in [0.2, 0.25, 1.0 / 3.0, 0.5, 0.7, 1.0] {
                    let greedy = doubling_on_cube(&weight, eta, &grid, &cube).0;
                    let brute = doubling_brute(&wv, eta);
                    ensure!(rel_gap(greedy, brute) <= 1e-12, "{} doubling eta {eta}: {greedy} vs {brute}", grid.spec());
                }
                for q in [1.0, 1.5, 2.0, 4.0] {
                    let greedy = dual_inner_min(&hf, &weight, q, &CellSet::new(cells.clone())).unwrap();
                    let brute = dual_min_brute(&hv, &wv, cell, q);
                    ensure!(
                        (greedy - brute).abs() <= 1e-12 * greedy.abs().max(brute.abs()).max(f64::MIN_POSITIVE),
                        "{} dual q {q}: {greedy} vs {brute}",
                        grid.spec()
                    );
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} cubes on grids with at most 12 cells, three inner problems each"))
}

fn criterion_7() -> Outcome {
    let grid = Grid::standard(1, 6).unwrap();
    let cell = grid.cell_measure();
    let (mut low, mut high) = (f64::INFINITY, 0.0f64);
    for t in 0..100 {
        let mut r = rng(700 + t);
        let h = sparse_nonnegative(&mut r, grid.cell_count());
        let w = lognormal(&mut r, grid.cell_count(), 1.0);
        let hf = GridFunction::from_values(&grid, h.clone()).unwrap();
        let weight = Weight::from_values(&grid, w.clone()).unwrap();
        for q in [1.0, 1.5, 2.0, 4.0] {
            let wq: Vec<f64> = w.iter().map(|x| x.powf(q)).collect();
            let exact_weak = weak(&h, &wq, cell, q);
            let lib_weak = lib(weak_norm(&hf, &lib(weight.pow(q))?, q))?;
            ensure!(rel_gap(exact_weak, lib_weak) <= 1e-12, "weak norm {lib_weak} vs oracle {exact_weak}");
            let est = lib(weak_dual_estimate(&hf, &weight, q, &level_set_candidates(&hf)))?.value;
            let ratio = est / exact_weak;
            ensure!(ratio >= (-1.0 / q).exp2() * (1.0 - 1e-12), "q {q}: ratio {ratio} below 2^(-1/q)");
            ensure!(ratio <= conj(q) * (1.0 + 1e-12), "q {q}: ratio {ratio} above q'");
            low = low.min(ratio * (1.0 / q).exp2());
            high = high.max(ratio / conj(q));
        }
    }
    Ok(format!("400 cases, min ratio/2^(-1/q) {low:.6}, max ratio/q' {high:.6}"))
}

fn criterion_8() -> Outcome {
    let grid = Grid::standard(1, 6).unwrap();
    let cell = grid.cell_measure();
    let mut worst: f64 = 0.0;
    for t in 0..500 {
        let mut r = rng(800 + t);
        let mut f = sparse_nonnegative(&mut r, grid.cell_count());
        for v in f.iter_mut() {
            if rand::Rng::random_bool(&mut r, 0.5) {
                *v = -*v;
            }
        }
        let u = lognormal(&mut r, grid.cell_count(), 1.0);
        let p = rand::Rng::random_range(&mut r, 1.0..5.0);
        let (wk, st, one) = (weak(&f, &u, cell, p), lp(&f, &u, cell, p), lorentz_one(&f, &u, cell, p));
        let norms = lib(lorentz_norms(
            &GridFunction::from_values(&grid, f.clone()).unwrap(),
            &Weight::from_values(&grid, u.clone()).unwrap(),
            p,
        ))?;
        for (name, a, b) in [("weak", wk, norms.weak), ("strong", st, norms.strong), ("one", one, norms.one)] {
            ensure!(rel_gap(a, b) <= 1e-12, "trial {t}: {name} norm {b} vs oracle {a}");
        }
        ensure!(wk <= st * (1.0 + 1e-12) && st <= one * (1.0 + 1e-12), "trial {t}: chain fails at p = {p}");
        worst = worst.max(wk / st).max(st / one);
    }
    Ok(format!("500 instances, max step ratio {worst:.6}"))
}

fn criterion_9() -> Outcome {
    let mut details = Vec::new();
    for q0 in ["inf", "4"] {
        for exp in [Experiment::RestrictedWeak, Experiment::MultiplierWeak, Experiment::Strong] {
            let cfg = config(&[("grid", "n=1,L=8"), ("family", "power:a=0..0.9:10"), ("q0", q0), ("tol", "0.05")]);
            let r = lib(experiments::sweep(exp, &cfg))?;
            ensure!(r.rows.len() == 10, "{exp}: {} rows", r.rows.len());
            ensure!(r.pass(), "{exp} q0={q0}: {:?}", r.summary());
            let slope = r.notes.iter().find(|n| n.starts_with("slope")).cloned().unwrap_or_default();
            details.push(format!("{exp} q0={q0} {}", slope.split(" intercept").next().unwrap_or("")));
        }
    }
    Ok(details.join("; "))
}

fn criterion_10() -> Outcome {
    let small = config(&[("grid", "n=1,L=5"), ("trials", "8"), ("seed", "11")]);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut runs = 0;
    for exp in Experiment::all() {
        let a = lib(experiments::verify(exp, &small))?.to_csv();
        let b = lib(serial.install(|| experiments::verify(exp, &small)))?.to_csv();
        ensure!(a == b, "verify {exp} differs between runs");
        runs += 1;
    }
    let sweep_cfg = config(&[("grid", "n=1,L=6"), ("trials", "10"), ("family", "power:a=0..0.9:5")]);
    for exp in Experiment::all().into_iter().filter(Experiment::is_ratio) {
        let a = lib(experiments::sweep(exp, &sweep_cfg))?.to_csv();
        let b = lib(serial.install(|| experiments::sweep(exp, &sweep_cfg)))?.to_csv();
        ensure!(a == b, "sweep {exp} differs between runs");
        runs += 1;
    }
    Ok(format!("{runs} repeated runs byte-identical, parallel against serial"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("fractional maximal strong bound", criterion_1, Some(Duration::from_secs(10))),
        ("weak (1,1) with constant 1", criterion_2, None),
        ("Calderon-Zygmund decomposition", criterion_3, Some(Duration::from_secs(10))),
        ("restricted constant bracket", criterion_4, None),
        ("doubling bound", criterion_5, None),
        ("greedy against brute force", criterion_6, None),
        ("dual weak-norm bracket", criterion_7, None),
        ("Lorentz embeddings", criterion_8, None),
        ("ratio finiteness and slope", criterion_9, Some(Duration::from_secs(120))),
        ("determinism", criterion_10, None),
    ];
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if elapsed > limit {
                outcome = Err(format!("took {elapsed:.1?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{elapsed:.2?}]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {} ({name}): {detail} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
