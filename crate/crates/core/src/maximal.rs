//! Dyadic fractional maximal operators with respect to a weighted measure:
//!
//! ```text
//! M_{α,u} f(x) = sup_{Q ∋ x} u(Q)^{-(1-α/n)} ∫_Q |f| du
//! ```
//!
//! with the supremum over the cubes of one truncated grid. Cells of a shifted
//! grid covered by no coarse cube still have their own finest cube.

use crate::error::{Error, Result};
use crate::exponents::conjugate;
use crate::function::{GridFunction, Weight};
use crate::grid::Grid;

fn check_alpha(alpha: f64, n: usize) -> Result<()> {
    if !(0.0..n as f64).contains(&alpha) {
        return Err(Error::Parameter(format!("need 0 <= alpha < n, got alpha={alpha}, n={n}")));
    }
    Ok(())
}

/// Per-cube values `u(Q)^{-(1-α/n)} ∫_Q |f| du`, indexed by cube id.
pub fn cube_averages(f: &GridFunction, u: &Weight, alpha: f64, grid: &Grid) -> Result<Vec<f64>> {
    f.check_grid(grid)?;
    u.check_grid(grid)?;
    check_alpha(alpha, grid.dim())?;
    let cell = grid.cell_measure();
    let fu: Vec<f64> = f.values().iter().zip(u.values()).map(|(v, w)| v.abs() * w * cell).collect();
    let um: Vec<f64> = u.values().iter().map(|w| w * cell).collect();
    let num = grid.cube_sums(&fu);
    let den = grid.cube_sums(&um);
    let e = 1.0 - alpha / grid.dim() as f64;
    Ok(num.iter().zip(&den).map(|(a, b)| a / b.powf(e)).collect())
}

/// `M_{α,u} f` by one coarse-to-fine sweep carrying the running maximum down
/// the tree.
pub fn dyadic_maximal(f: &GridFunction, u: &Weight, alpha: f64, grid: &Grid) -> Result<GridFunction> {
    let avg = cube_averages(f, u, alpha, grid)?;
    let mut running = avg.clone();
    for id in 0..grid.cube_count() {
        let q = grid.cube_from_id(id);
        if let Ok(parent) = grid.parent(&q) {
            let above = running[grid.cube_id(&parent)];
            running[id] = running[id].max(above);
        }
    }
    let values = (0..grid.cell_count())
        .map(|c| {
            let leaf = grid.cube_containing(c, grid.depth()).expect("finest cubes cover every cell");
            running[grid.cube_id(&leaf)]
        })
        .collect();
    GridFunction::from_values(grid, values)
}

/// `(1 + p'/q)^{1-α/n}`, the strong-type constant for `1 < p ≤ n/α` and
/// `1/p − 1/q = α/n`.
pub fn strong_constant(p: f64, q: f64, alpha: f64, n: usize) -> f64 {
    (1.0 + conjugate(p) / q).powf(1.0 - alpha / n as f64)
}

/// Both sides of `‖M_{α,u} f‖_{L^q(u)} ≤ C ‖f‖_{L^p(u)}`: returns
/// `(‖M_{α,u} f‖_{L^q(u)}, C ‖f‖_{L^p(u)})`.
pub fn strong_bound_sides(f: &GridFunction, u: &Weight, p: f64, alpha: f64, grid: &Grid) -> Result<(f64, f64)> {
    let n = grid.dim() as f64;
    if !(p > 1.0 && (alpha == 0.0 || p <= n / alpha)) {
        return Err(Error::Parameter(format!("need 1 < p <= n/alpha, got p={p}, alpha={alpha}")));
    }
    let q = 1.0 / (1.0 / p - alpha / n);
    let m = dyadic_maximal(f, u, alpha, grid)?;
    let lhs = lp_norm(&m, u, q);
    let rhs = strong_constant(p, q, alpha, grid.dim()) * lp_norm(f, u, p);
    Ok((lhs, rhs))
}

fn lp_norm(f: &GridFunction, u: &Weight, r: f64) -> f64 {
    let cell = f.cell_measure();
    if r.is_infinite() {
        return f.max_abs();
    }
    f.values().iter().zip(u.values()).map(|(v, w)| v.abs().powf(r) * w * cell).sum::<f64>().powf(1.0 / r)
}
