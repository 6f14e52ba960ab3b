//! Brute-force oracles shared by the integration tests. They work on plain
//! cell-value slices and never call the inner optimizations of the crate.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` log-normal samples.
pub fn lognormal(rng: &mut ChaCha8Rng, count: usize, sigma: f64) -> Vec<f64> {
    let d = LogNormal::new(0.0, sigma).unwrap();
    (0..count).map(|_| d.sample(rng)).collect()
}

/// Log-normal samples with roughly a third of the cells set to zero.
pub fn sparse_nonnegative(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let mut v = lognormal(rng, count, 1.0);
    for x in v.iter_mut() {
        if rng.random_bool(1.0 / 3.0) {
            *x = 0.0;
        }
    }
    if v.iter().all(|x| *x == 0.0) {
        v[0] = 1.0;
    }
    v
}

pub fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// All subsets of `0..k` as bit masks, the empty set included.
fn masks(k: usize) -> impl Iterator<Item = u32> {
    0..(1u32 << k)
}

fn members(mask: u32, k: usize) -> impl Iterator<Item = usize> {
    (0..k).filter(move |i| mask & (1 << i) != 0)
}

/// `sup_{E⊆Q} |E| |Q|^{α/n-1} w^q(Q)^{1/q} / w^p(E)^{1/p}` over every subset of
/// whole cells plus one fractional cell, checking the stationary fill of
/// the fractional cell as well.
pub fn ar_pq_brute(w: &[f64], cell: f64, p: f64, q: f64, alpha: f64, n: usize) -> f64 {
    let k = w.len();
    let cube = k as f64 * cell;
    let outer = cube.powf(alpha / n as f64 - 1.0) * (w.iter().map(|x| x.powf(q)).sum::<f64>() * cell).powf(1.0 / q);
    let value = |m: f64, mass: f64| m * cell * outer / (mass * cell).powf(1.0 / p);
    let mut best: f64 = 0.0;
    for mask in masks(k) {
        let m = mask.count_ones() as f64;
        let wp: f64 = members(mask, k).map(|i| w[i].powf(p)).sum();
        if mask != 0 {
            best = best.max(value(m, wp));
        }
        if p > 1.0 {
            for c in (0..k).filter(|c| mask & (1 << c) == 0) {
                let b = w[c].powf(p);
                let t = (m * b / p - wp) / (b * (1.0 - 1.0 / p));
                if t > 0.0 && t < 1.0 {
                    best = best.max(value(m + t, wp + t * b));
                }
            }
        }
    }
    best
}

/// `w^q(Q)^{1/q} |Q|^{α/n-1} sup_y y w^p({w^{-p} ≥ y})^{1/p'}` on one cube.
pub fn ar_pq_prime_direct(w: &[f64], cell: f64, p: f64, q: f64, alpha: f64, n: usize) -> f64 {
    let cube = w.len() as f64 * cell;
    let mut weak: f64 = 0.0;
    for &x in w {
        let y = x.powf(-p);
        let mass: f64 = w.iter().filter(|v| v.powf(-p) >= y).map(|v| v.powf(p) * cell).sum();
        weak = weak.max(y * mass.powf(1.0 - 1.0 / p));
    }
    (w.iter().map(|x| x.powf(q)).sum::<f64>() * cell).powf(1.0 / q) * cube.powf(alpha / n as f64 - 1.0) * weak
}

/// `sup { u(Q)/u(E) : E ⊆ Q, |E| ≥ η|Q| }` with `E` any set of whole cells
/// plus at most one fractional cell.
pub fn doubling_brute(u: &[f64], eta: f64) -> f64 {
    let k = u.len();
    let need = eta * k as f64;
    let total: f64 = u.iter().sum();
    let mut lightest = f64::INFINITY;
    for mask in masks(k) {
        let m = mask.count_ones() as f64;
        let mass: f64 = members(mask, k).map(|i| u[i]).sum();
        if m >= need {
            lightest = lightest.min(mass);
            continue;
        }
        let t = need - m;
        if t <= 1.0 {
            for c in (0..k).filter(|c| mask & (1 << c) == 0) {
                lightest = lightest.min(mass + t * u[c]);
            }
        }
    }
    total / lightest
}

/// `min { u(G')^{-1+1/q} ∫_{G'} h du : G' ⊆ G, u(G') ≥ u(G)/2 }` with `G'` any
/// set of whole cells plus at most one fractional cell.
pub fn dual_min_brute(h: &[f64], u: &[f64], cell: f64, q: f64) -> f64 {
    let k = h.len();
    let half = u.iter().sum::<f64>() * cell / 2.0;
    let value = |mass: f64, integral: f64| mass.powf(-1.0 + 1.0 / q) * integral;
    let mut best = f64::INFINITY;
    for mask in masks(k) {
        let mass: f64 = members(mask, k).map(|i| u[i] * cell).sum();
        let integral: f64 = members(mask, k).map(|i| h[i] * u[i] * cell).sum();
        if mask != 0 && mass >= half {
            best = best.min(value(mass, integral));
        }
        for c in (0..k).filter(|c| mask & (1 << c) == 0) {
            let uc = u[c] * cell;
            let lo = ((half - mass) / uc).max(0.0);
            if lo > 1.0 {
                continue;
            }
            let mut ts = vec![lo, 1.0];
            if h[c] > 0.0 {
                let t = q * ((1.0 - 1.0 / q) * integral - h[c] * mass) / (h[c] * uc);
                if t > lo && t < 1.0 {
                    ts.push(t);
                }
            }
            for t in ts {
                if mass + t * uc > 0.0 {
                    best = best.min(value(mass + t * uc, integral + t * h[c] * uc));
                }
            }
        }
    }
    best
}

/// `(Σ |f|^r u cell)^{1/r}`.
pub fn lp(f: &[f64], u: &[f64], cell: f64, r: f64) -> f64 {
    f.iter().zip(u).map(|(a, b)| a.abs().powf(r) * b * cell).sum::<f64>().powf(1.0 / r)
}

/// `sup_y y u({|f| ≥ y})^{1/r}`, `r = ∞` giving the maximum.
pub fn weak(f: &[f64], u: &[f64], cell: f64, r: f64) -> f64 {
    let mut best: f64 = 0.0;
    for &y in f {
        let y = y.abs();
        if y == 0.0 {
            continue;
        }
        let mass: f64 = f.iter().zip(u).filter(|(a, _)| a.abs() >= y).map(|(_, b)| b * cell).sum();
        best = best.max(y * mass.powf(1.0 / r));
    }
    best
}

/// `r ∫_0^∞ u({|f| > y})^{1/r} dy`, integrating the step function exactly.
pub fn lorentz_one(f: &[f64], u: &[f64], cell: f64, r: f64) -> f64 {
    let mut levels: Vec<f64> = f.iter().map(|x| x.abs()).filter(|x| *x > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut total = 0.0;
    let mut prev = 0.0;
    for y in levels {
        let mass: f64 = f.iter().zip(u).filter(|(a, _)| a.abs() >= y).map(|(_, b)| b * cell).sum();
        total += (y - prev) * mass.powf(1.0 / r);
        prev = y;
    }
    r * total
}

/// Per level `k`, the values `u(I)^{-(1-α)} ∫_I |f| du` of the dyadic
/// intervals of length `2^{-k}` in `[0,1)`, `2^L` cells.
pub fn interval_averages(f: &[f64], u: &[f64], alpha: f64, depth: u32) -> Vec<Vec<f64>> {
    let cells = 1usize << depth;
    let cell = 1.0 / cells as f64;
    (0..=depth)
        .map(|k| {
            let size = cells >> k;
            (0..1usize << k)
                .map(|j| {
                    let range = j * size..(j + 1) * size;
                    let num: f64 = range.clone().map(|c| f[c].abs() * u[c] * cell).sum();
                    let den: f64 = range.map(|c| u[c] * cell).sum();
                    num / den.powf(1.0 - alpha)
                })
                .collect()
        })
        .collect()
}

/// Dyadic fractional maximal function on `[0,1)` by enumerating every
/// interval containing each cell.
pub fn maximal_1d(f: &[f64], u: &[f64], alpha: f64, depth: u32) -> Vec<f64> {
    let avg = interval_averages(f, u, alpha, depth);
    (0..1usize << depth)
        .map(|c| (0..=depth).map(|k| avg[k as usize][c >> (depth - k)]).fold(0.0, f64::max))
        .collect()
}

/// Maximal dyadic intervals `(level, index)` of `[0,1)` whose `u`-average of
/// `h` exceeds `lambda`, found top-down.
pub fn cz_family_1d(h: &[f64], u: &[f64], lambda: f64, depth: u32) -> Vec<(u32, usize)> {
    let avg = interval_averages(h, u, 0.0, depth);
    let mut out = Vec::new();
    let mut stack = vec![(0u32, 0usize)];
    while let Some((k, j)) = stack.pop() {
        if avg[k as usize][j] > lambda {
            out.push((k, j));
        } else if k < depth {
            stack.push((k + 1, 2 * j));
            stack.push((k + 1, 2 * j + 1));
        }
    }
    out.sort();
    out
}
