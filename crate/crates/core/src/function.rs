//! Piecewise-constant functions and weights on the finest cells of a grid.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{DyadicCube, Grid};

/// A real function, constant on each finest cell of a depth-`L` lattice over
/// `[0,1)^n`. The values are the function; nothing is stored at coarser
/// scales.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    dim: usize,
    depth: u32,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::LengthMismatch { expected: grid.cell_count(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(GridFunction { dim: grid.dim(), depth: grid.depth(), values })
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<Self> {
        GridFunction::from_values(grid, vec![c; grid.cell_count()])
    }

    pub fn zero(grid: &Grid) -> Self {
        GridFunction { dim: grid.dim(), depth: grid.depth(), values: vec![0.0; grid.cell_count()] }
    }

    pub fn indicator(grid: &Grid, set: &CellSet) -> Self {
        let mut values = vec![0.0; grid.cell_count()];
        for &c in set.cells() {
            values[c] = 1.0;
        }
        GridFunction { dim: grid.dim(), depth: grid.depth(), values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_measure(&self) -> f64 {
        (-((self.dim as u32 * self.depth) as f64)).exp2()
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.dim != grid.dim() || self.depth != grid.depth() {
            return Err(Error::GridMismatch(
                format!("n={},L={}", self.dim, self.depth),
                format!("n={},L={}", grid.dim(), grid.depth()),
            ));
        }
        Ok(())
    }

    pub fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.dim != other.dim || self.depth != other.depth {
            return Err(Error::GridMismatch(
                format!("n={},L={}", self.dim, self.depth),
                format!("n={},L={}", other.dim, other.depth),
            ));
        }
        Ok(())
    }

    /// Cellwise map. The closure must keep values finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { dim: self.dim, depth: self.depth, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridFunction { dim: self.dim, depth: self.depth, values })
    }

    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn require_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0) {
            Some(i) => Err(Error::Negative(i)),
            None => Ok(()),
        }
    }

    /// `∫_Q f dx`.
    pub fn cube_integral(&self, grid: &Grid, q: &DyadicCube) -> f64 {
        grid.cells(q).map(|c| self.values[c]).sum::<f64>() * self.cell_measure()
    }

    /// `∫ f dx` over the whole domain.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_measure()
    }

    /// CSV dump, one `cell,value` row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{i},{v:.16e}");
        }
        out
    }
}

/// `⟨f, g⟩ = ∫ f g dx`.
pub fn pairing(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.check_same(g)?;
    Ok(f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>() * f.cell_measure())
}

/// Fractional `L^r` average `(|Q|^{-1+α/n} ∫_Q |f|^r)^{1/r}`. For `r = ∞`
/// this is the maximum of `|f|` over `Q`, defined only for `α = 0`.
pub fn local_average(f: &GridFunction, alpha: f64, r: f64, grid: &Grid, q: &DyadicCube) -> Result<f64> {
    f.check_grid(grid)?;
    if r.is_nan() || r < 1.0 {
        return Err(Error::Parameter(format!("average exponent r = {r} must be >= 1")));
    }
    if r.is_infinite() {
        if alpha != 0.0 {
            return Err(Error::Parameter("the r = ∞ average is only defined for alpha = 0".into()));
        }
        return Ok(grid.cells(q).fold(0.0, |m, c| m.max(f.values[c].abs())));
    }
    let n = grid.dim() as f64;
    let integral: f64 = grid.cells(q).map(|c| f.values[c].abs().powf(r)).sum::<f64>() * f.cell_measure();
    Ok((grid.measure(q).powf(alpha / n - 1.0) * integral).powf(1.0 / r))
}

/// A strictly positive [`GridFunction`], also used as the measure
/// `u(E) = ∫_E u dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight(GridFunction);

impl Weight {
    pub fn new(f: GridFunction) -> Result<Self> {
        if let Some((cell, &value)) = f.values.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(Error::NonPositiveWeight { cell, value });
        }
        Ok(Weight(f))
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        Weight::new(GridFunction::from_values(grid, values)?)
    }

    /// Lebesgue measure as the constant weight 1.
    pub fn lebesgue(grid: &Grid) -> Self {
        Weight(GridFunction::constant(grid, 1.0).expect("constant function is finite"))
    }

    pub fn as_function(&self) -> &GridFunction {
        &self.0
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        self.0.check_grid(grid)
    }

    /// `w^s`; fails only if the power overflows.
    pub fn pow(&self, s: f64) -> Result<Weight> {
        let f = self.0.map(|v| v.powf(s));
        if let Some(i) = f.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Weight::new(f)
    }

    pub fn recip(&self) -> Weight {
        Weight(self.0.map(|v| 1.0 / v))
    }

    pub fn scale(&self, c: f64) -> Result<Weight> {
        Weight::new(self.0.scale(c))
    }

    /// `u(Q)`.
    pub fn cube_mass(&self, grid: &Grid, q: &DyadicCube) -> f64 {
        self.0.cube_integral(grid, q)
    }

    /// `u(E)`.
    pub fn set_mass(&self, set: &CellSet) -> f64 {
        set.cells().iter().map(|&c| self.0.values[c]).sum::<f64>() * self.0.cell_measure()
    }

    /// `u` of the whole domain.
    pub fn total_mass(&self) -> f64 {
        self.0.integral()
    }

    /// Mass of one finest cell.
    pub fn cell_mass(&self, cell: usize) -> f64 {
        self.0.values[cell] * self.0.cell_measure()
    }

    /// `∫_Q |f| du`.
    pub fn weighted_cube_integral(&self, f: &GridFunction, grid: &Grid, q: &DyadicCube) -> f64 {
        grid.cells(q).map(|c| f.values[c].abs() * self.0.values[c]).sum::<f64>() * self.0.cell_measure()
    }
}

/// A set of finest cells, kept sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct CellSet {
    cells: Vec<usize>,
}

impl CellSet {
    pub fn new(mut cells: Vec<usize>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        CellSet { cells }
    }

    pub fn from_cube(grid: &Grid, q: &DyadicCube) -> Self {
        CellSet::new(grid.cells(q).collect())
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    /// Lebesgue measure.
    pub fn measure(&self, grid: &Grid) -> f64 {
        self.cells.len() as f64 * grid.cell_measure()
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        CellSet { cells: self.cells.iter().copied().filter(|c| !other.contains(*c)).collect() }
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.cells.iter().all(|c| other.contains(*c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(depth: u32) -> Grid {
        Grid::standard(1, depth).unwrap()
    }

    #[test]
    fn rejects_bad_values() {
        let g = line(1);
        assert!(matches!(GridFunction::from_values(&g, vec![1.0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(GridFunction::from_values(&g, vec![1.0, f64::NAN]), Err(Error::NonFinite(1))));
        assert!(matches!(Weight::from_values(&g, vec![1.0, 0.0]), Err(Error::NonPositiveWeight { cell: 1, .. })));
    }

    #[test]
    fn averages_of_constants() {
        let g = Grid::standard(2, 2).unwrap();
        let f = GridFunction::constant(&g, -3.0).unwrap();
        for q in g.cubes() {
            for r in [1.0, 2.0, 3.5] {
                assert!((local_average(&f, 0.0, r, &g, &q).unwrap() - 3.0).abs() < 1e-14);
            }
            assert_eq!(local_average(&f, 0.0, f64::INFINITY, &g, &q).unwrap(), 3.0);
        }
    }

    #[test]
    fn average_of_indicator() {
        let g = line(2);
        let f = GridFunction::indicator(&g, &CellSet::new(vec![0]));
        let root = g.cubes().next().unwrap();
        assert!((local_average(&f, 0.0, 2.0, &g, &root).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fractional_average_matches_direct_sum() {
        let g = line(2);
        let f = GridFunction::from_values(&g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let left = g.level_cubes(1).next().unwrap();
        // |Q|^{-1/2} * (1 + 2)/4 with |Q| = 1/2
        let expected = 0.5f64.powf(-0.5) * 0.75;
        assert!((local_average(&f, 0.5, 1.0, &g, &left).unwrap() - expected).abs() < 1e-15);
        assert!(local_average(&f, 0.0, 0.5, &g, &left).is_err());
    }

    #[test]
    fn pairing_of_indicators_is_overlap_measure() {
        let g = line(3);
        let a = GridFunction::indicator(&g, &CellSet::new(vec![0, 1, 2, 5]));
        let b = GridFunction::indicator(&g, &CellSet::new(vec![2, 5, 6]));
        assert!((pairing(&a, &b).unwrap() - 2.0 / 8.0).abs() < 1e-15);
        let one = GridFunction::constant(&g, 1.0).unwrap();
        assert_eq!(pairing(&one, &one).unwrap(), 1.0);
        let other = GridFunction::zero(&line(2));
        assert!(matches!(pairing(&a, &other), Err(Error::GridMismatch(..))));
    }

    #[test]
    fn cell_set_algebra() {
        let a = CellSet::new(vec![3, 1, 1, 2]);
        assert_eq!(a.cells(), &[1, 2, 3]);
        let b = CellSet::new(vec![2]);
        assert_eq!(a.difference(&b).cells(), &[1, 3]);
        assert!(b.is_subset(&a));
    }
}
