//! Weighted dyadic Calderón–Zygmund decomposition.
//!
//! For `h ≥ 0`, a reference weight `u` and `λ > 0`, `P` is the family of
//! maximal grid cubes with `u(P)^{-1} ∫_P h du > λ`, `Ω = ∪P`,
//! `g = Σ_P ⟨h⟩^u_P χ_P + h χ_{Ω^c}` and `b = h − g`.
//!
//! `b` is stored as a rounded part plus its exact rounding error, so
//! `g + b = h` holds exactly and not only up to rounding.

use crate::error::{Error, Result};
use crate::function::{CellSet, GridFunction, Weight};
use crate::grid::{DyadicCube, Grid};

#[derive(Clone, Debug, PartialEq)]
pub struct CzDecomposition {
    pub lambda: f64,
    /// maximal cubes, ordered by (level, index)
    pub family: Vec<DyadicCube>,
    pub good: GridFunction,
    /// `fl(h − g)`
    pub bad: GridFunction,
    /// exact rounding error of `bad`: `h − g = bad + bad_error`
    pub bad_error: GridFunction,
    pub omega: CellSet,
}

/// Error-free sum: `a + b = s + e` exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Exact test of `Σ terms = 0`: the terms are accumulated into a
/// nonoverlapping expansion, which vanishes only if every component does.
pub fn exact_sum_is_zero(terms: &[f64]) -> bool {
    let mut expansion: Vec<f64> = Vec::new();
    for &t in terms {
        let mut q = t;
        let mut next = Vec::with_capacity(expansion.len() + 1);
        for &e in &expansion {
            let (s, err) = two_sum(q, e);
            if err != 0.0 {
                next.push(err);
            }
            q = s;
        }
        next.push(q);
        expansion = next;
    }
    expansion.iter().all(|&x| x == 0.0)
}

/// `u(Q)^{-1} ∫_Q h du` for every cube, indexed by cube id.
pub fn weighted_averages(h: &GridFunction, u: &Weight, grid: &Grid) -> Vec<f64> {
    let hu: Vec<f64> = h.values().iter().zip(u.values()).map(|(a, b)| a * b).collect();
    let num = grid.cube_sums(&hu);
    let den = grid.cube_sums(u.values());
    num.iter().zip(&den).map(|(a, b)| a / b).collect()
}

pub fn decompose(h: &GridFunction, u: &Weight, lambda: f64, grid: &Grid) -> Result<CzDecomposition> {
    h.check_grid(grid)?;
    u.check_grid(grid)?;
    h.require_nonnegative()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("threshold lambda = {lambda} must be positive")));
    }
    let avg = weighted_averages(h, u, grid);
    let tops = grid.top_cubes();
    for q in &tops {
        let a = avg[grid.cube_id(q)];
        if a > lambda {
            return Err(Error::RootExceedsThreshold { average: a, threshold: lambda });
        }
    }
    let mut family = Vec::new();
    let mut stack: Vec<DyadicCube> = tops.into_iter().rev().collect();
    while let Some(q) = stack.pop() {
        if avg[grid.cube_id(&q)] > lambda {
            family.push(q);
        } else {
            stack.extend(grid.children(&q).into_iter().rev());
        }
    }
    family.sort_by_key(|q| grid.cube_id(q));

    let mut good = h.values().to_vec();
    let mut in_omega = vec![false; grid.cell_count()];
    for p in &family {
        let a = avg[grid.cube_id(p)];
        for c in grid.cells(p) {
            good[c] = a;
            in_omega[c] = true;
        }
    }
    let (bad, bad_error): (Vec<f64>, Vec<f64>) =
        h.values().iter().zip(&good).map(|(&hv, &gv)| two_sum(hv, -gv)).unzip();
    let omega = CellSet::new((0..grid.cell_count()).filter(|&c| in_omega[c]).collect());
    Ok(CzDecomposition {
        lambda,
        family,
        good: GridFunction::from_values(grid, good)?,
        bad: GridFunction::from_values(grid, bad)?,
        bad_error: GridFunction::from_values(grid, bad_error)?,
        omega,
    })
}

impl CzDecomposition {
    /// `∫_P b du`, accumulating the rounded part and its error separately.
    pub fn bad_integral(&self, u: &Weight, grid: &Grid, p: &DyadicCube) -> f64 {
        let cell = grid.cell_measure();
        let (mut hi, mut lo) = (0.0, 0.0);
        for c in grid.cells(p) {
            hi += self.bad.values()[c] * u.values()[c];
            lo += self.bad_error.values()[c] * u.values()[c];
        }
        (hi + lo) * cell
    }

    /// `g + b = h` holds exactly on every cell.
    pub fn reconstructs_exactly(&self, h: &GridFunction) -> bool {
        (0..h.len()).all(|c| {
            exact_sum_is_zero(&[
                self.good.values()[c],
                self.bad.values()[c],
                self.bad_error.values()[c],
                -h.values()[c],
            ])
        })
    }

    /// `b` rounded to one float per cell.
    pub fn bad_rounded(&self) -> GridFunction {
        self.bad.zip_map(&self.bad_error, |a, b| a + b).expect("same grid")
    }

    /// Every member has a parent in the grid whose average is at most `λ`,
    /// and no two members intersect.
    pub fn check_maximal(&self, h: &GridFunction, u: &Weight, grid: &Grid) -> Result<()> {
        let avg = weighted_averages(h, u, grid);
        for (i, p) in self.family.iter().enumerate() {
            let parent = grid.parent(p)?;
            if avg[grid.cube_id(&parent)] > self.lambda {
                return Err(Error::Parameter(format!("parent of member {i} also exceeds lambda")));
            }
            for r in &self.family[i + 1..] {
                if grid.relation(p, r)? != crate::grid::Relation::Disjoint {
                    return Err(Error::Parameter(format!("member {i} meets another member")));
                }
            }
        }
        Ok(())
    }

    /// CSV with a `cube` section (`level,index`) and a `cell` section
    /// (`cell,good,bad`).
    pub fn to_csv(&self, grid: &Grid) -> String {
        let n = grid.dim();
        let mut out = format!("# cz grid {} lambda {:.16e}\nkind,level,index\n", grid.spec(), self.lambda);
        for p in &self.family {
            let index: Vec<String> = p.index[..n].iter().map(|i| i.to_string()).collect();
            out.push_str(&format!("cube,{},{}\n", p.level, index.join(":")));
        }
        out.push_str("cell,good,bad\n");
        let b = self.bad_rounded();
        for (c, (g, bv)) in self.good.values().iter().zip(b.values()).enumerate() {
            out.push_str(&format!("{c},{g:.16e},{bv:.16e}\n"));
        }
        out
    }
}
