//! Finite-depth dyadic grids over the unit cube.
//!
//! A [`Grid`] is the truncation of a (possibly shifted) dyadic lattice to the
//! cubes of levels `0..=depth` that lie wholly inside `[0,1)^n`. Functions live
//! on the finest cells of the standard lattice, so a shifted grid is realized
//! by translating the lattice by a whole number of finest cells: the offset is
//! the depth-`L` cell nearest to `a/3`. Every cube is then an exact block of
//! finest cells and all containment questions are integer comparisons.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// Upper bound on the number of finest cells (`2^(n*L)`).
pub const MAX_CELLS: usize = 1 << 24;

/// `{n, L, a}`: dimension, depth and shift vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub depth: u32,
    pub shift: [u8; MAX_DIM],
}

impl GridSpec {
    pub fn standard(dim: usize, depth: u32) -> Self {
        GridSpec { dim, depth, shift: [0; MAX_DIM] }
    }

    pub fn shifted(dim: usize, depth: u32, shift: &[u8]) -> Self {
        let mut s = [0; MAX_DIM];
        for (d, &a) in shift.iter().enumerate().take(MAX_DIM) {
            s[d] = a;
        }
        GridSpec { dim, depth, shift: s }
    }

    pub fn is_standard(&self) -> bool {
        self.shift.iter().all(|&a| a == 0)
    }

    pub fn shift(&self) -> &[u8] {
        &self.shift[..self.dim.min(MAX_DIM)]
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension must be in 1..={MAX_DIM}, got {}",
                self.dim
            )));
        }
        let bits = self.dim as u64 * self.depth as u64;
        if bits >= usize::BITS as u64 || (1usize << bits) > MAX_CELLS {
            return Err(Error::InvalidGrid(format!(
                "2^(n*L) = 2^{bits} cells exceeds the supported maximum"
            )));
        }
        if let Some(&a) = self.shift().iter().find(|&&a| a > 2) {
            return Err(Error::InvalidGrid(format!("shift component {a} not in {{0,1,2}}")));
        }
        if self.shift[self.dim..].iter().any(|&a| a != 0) {
            return Err(Error::InvalidGrid("shift has more components than the dimension".into()));
        }
        Ok(())
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={},L={}", self.dim, self.depth)?;
        if !self.is_standard() {
            write!(f, ",a=")?;
            for a in self.shift() {
                write!(f, "{a}")?;
            }
        }
        Ok(())
    }
}

/// Parses `n=<n>,L=<L>[,a=<digits>]`. A single shift digit is broadcast to
/// every coordinate.
impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut dim = None;
        let mut depth = None;
        let mut shift = None;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("grid field `{part}` is not key=value")))?;
            let value = value.trim();
            match key.trim() {
                "n" => dim = Some(parse_int::<usize>(value, "n")?),
                "L" | "l" => depth = Some(parse_int::<u32>(value, "L")?),
                "a" => shift = Some(value.to_string()),
                other => return Err(Error::Parse(format!("unknown grid field `{other}`"))),
            }
        }
        let dim = dim.ok_or_else(|| Error::Parse("grid spec is missing n".into()))?;
        let depth = depth.ok_or_else(|| Error::Parse("grid spec is missing L".into()))?;
        let mut spec = GridSpec::standard(dim, depth);
        if let Some(a) = shift {
            let digits: Vec<u8> = a
                .chars()
                .filter(|c| *c != ':')
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as u8)
                        .ok_or_else(|| Error::Parse(format!("shift `{a}` is not a digit string")))
                })
                .collect::<Result<_>>()?;
            let digits = if digits.len() == 1 { vec![digits[0]; dim.min(MAX_DIM)] } else { digits };
            if digits.len() != dim {
                return Err(Error::Parse(format!("shift `{a}` has {} components, n = {dim}", digits.len())));
            }
            spec = GridSpec::shifted(dim, depth, &digits);
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_int<T: FromStr>(v: &str, what: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("{what} = `{v}` is not a non-negative integer")))
}

/// A cube identified by its shift, level and integer index. Geometry is always
/// derived from the owning [`Grid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub shift: [u8; MAX_DIM],
    pub level: u32,
    pub index: [u32; MAX_DIM],
}

/// How two cubes of the same grid sit relative to each other. `QinR` means
/// the first argument is contained in the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Disjoint,
    QinR,
    RinQ,
    Equal,
}

#[derive(Clone, Debug)]
pub struct Grid {
    spec: GridSpec,
    side: usize,
    offset: [usize; MAX_DIM],
    /// per level: number of cubes along each axis
    counts: Vec<[usize; MAX_DIM]>,
    /// per level: id of the first cube of that level
    first_id: Vec<usize>,
    total: usize,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let side = 1usize << spec.depth;
        let mut offset = [0usize; MAX_DIM];
        for (o, &a) in offset.iter_mut().zip(&spec.shift).take(spec.dim) {
            // nearest depth-L lattice point to a/3
            *o = ((2 * a as usize * side + 3) / 6) % side;
        }
        let mut counts = Vec::with_capacity(spec.depth as usize + 1);
        let mut first_id = Vec::with_capacity(spec.depth as usize + 1);
        let mut total = 0;
        for k in 0..=spec.depth {
            let c = side >> k;
            let mut cnt = [1usize; MAX_DIM];
            for d in 0..spec.dim {
                let base = offset[d] % c;
                cnt[d] = (side - base) / c;
            }
            first_id.push(total);
            total += cnt[..spec.dim].iter().product::<usize>();
            counts.push(cnt);
        }
        Ok(Grid { spec, side, offset, counts, first_id, total })
    }

    pub fn standard(dim: usize, depth: u32) -> Result<Self> {
        Grid::new(GridSpec::standard(dim, depth))
    }

    /// The `3^n` shifted grids `a ∈ {0,1,2}^n`, standard grid first.
    pub fn all_shifts(dim: usize, depth: u32) -> Result<Vec<Grid>> {
        let mut grids = Vec::new();
        let total = 3usize.pow(dim as u32);
        for code in 0..total {
            let mut a = [0u8; MAX_DIM];
            let mut c = code;
            for slot in a.iter_mut().take(dim) {
                *slot = (c % 3) as u8;
                c /= 3;
            }
            grids.push(Grid::new(GridSpec::shifted(dim, depth, &a[..dim]))?);
        }
        Ok(grids)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn depth(&self) -> u32 {
        self.spec.depth
    }

    pub fn cells_per_side(&self) -> usize {
        self.side
    }

    pub fn cell_count(&self) -> usize {
        self.side.pow(self.spec.dim as u32)
    }

    /// Lebesgue measure of one finest cell.
    pub fn cell_measure(&self) -> f64 {
        (-((self.spec.dim as u32 * self.spec.depth) as f64)).exp2()
    }

    /// Number of cubes over all levels.
    pub fn cube_count(&self) -> usize {
        self.total
    }

    fn side_cells(&self, level: u32) -> usize {
        self.side >> level
    }

    fn base(&self, level: u32, d: usize) -> usize {
        self.offset[d] % self.side_cells(level)
    }

    pub fn level_count(&self, level: u32) -> usize {
        self.counts[level as usize][..self.spec.dim].iter().product()
    }

    pub fn contains_cube(&self, q: &DyadicCube) -> bool {
        q.shift == self.spec.shift
            && q.level <= self.spec.depth
            && (0..self.spec.dim).all(|d| (q.index[d] as usize) < self.counts[q.level as usize][d])
            && q.index[self.spec.dim..].iter().all(|&i| i == 0)
    }

    fn check(&self, q: &DyadicCube) -> Result<()> {
        if q.shift != self.spec.shift {
            return Err(Error::ShiftMismatch);
        }
        if !self.contains_cube(q) {
            return Err(Error::CubeNotInGrid(format!("{q:?}")));
        }
        Ok(())
    }

    /// Dense id in `0..cube_count()`, ordered by (level, index).
    pub fn cube_id(&self, q: &DyadicCube) -> usize {
        let cnt = &self.counts[q.level as usize];
        let mut id = 0;
        for d in (0..self.spec.dim).rev() {
            id = id * cnt[d] + q.index[d] as usize;
        }
        self.first_id[q.level as usize] + id
    }

    pub fn cube_from_id(&self, id: usize) -> DyadicCube {
        let level = match self.first_id.binary_search(&id) {
            Ok(k) => {
                // several levels may be empty and share a first id
                let mut k = k;
                while k + 1 < self.first_id.len() && self.first_id[k + 1] == id {
                    k += 1;
                }
                k
            }
            Err(k) => k - 1,
        };
        let cnt = &self.counts[level];
        let mut rest = id - self.first_id[level];
        let mut index = [0u32; MAX_DIM];
        for d in 0..self.spec.dim {
            index[d] = (rest % cnt[d]) as u32;
            rest /= cnt[d];
        }
        DyadicCube { shift: self.spec.shift, level: level as u32, index }
    }

    /// Cubes of one level in id order.
    pub fn level_cubes(&self, level: u32) -> impl Iterator<Item = DyadicCube> + '_ {
        let start = self.first_id[level as usize];
        (start..start + self.level_count(level)).map(move |id| self.cube_from_id(id))
    }

    /// All cubes, coarse to fine.
    pub fn cubes(&self) -> impl Iterator<Item = DyadicCube> + '_ {
        (0..self.total).map(move |id| self.cube_from_id(id))
    }

    /// First finest cell along each axis and the side length in cells.
    pub fn cell_box(&self, q: &DyadicCube) -> ([usize; MAX_DIM], usize) {
        let c = self.side_cells(q.level);
        let mut start = [0usize; MAX_DIM];
        for (d, s) in start.iter_mut().enumerate().take(self.spec.dim) {
            *s = self.base(q.level, d) + q.index[d] as usize * c;
        }
        (start, c)
    }

    /// Half-open coordinate interval of the cube along each axis.
    pub fn bounds(&self, q: &DyadicCube) -> Vec<(f64, f64)> {
        let (start, c) = self.cell_box(q);
        let h = 1.0 / self.side as f64;
        (0..self.spec.dim).map(|d| (start[d] as f64 * h, (start[d] + c) as f64 * h)).collect()
    }

    pub fn axis_ranges(&self, q: &DyadicCube) -> Vec<Range<usize>> {
        let (start, c) = self.cell_box(q);
        (0..self.spec.dim).map(|d| start[d]..start[d] + c).collect()
    }

    /// Lebesgue measure `2^{-nk}`.
    pub fn measure(&self, q: &DyadicCube) -> f64 {
        (-((self.spec.dim as u32 * q.level) as f64)).exp2()
    }

    /// Number of finest cells in the cube, `2^{n(L-k)}`.
    pub fn cube_cell_count(&self, q: &DyadicCube) -> usize {
        self.side_cells(q.level).pow(self.spec.dim as u32)
    }

    /// Linear indices of the finest cells of `q` (axis 0 fastest).
    pub fn cells(&self, q: &DyadicCube) -> CellIter {
        let (start, c) = self.cell_box(q);
        CellIter { dim: self.spec.dim, side: self.side, start, len: c, pos: [0; MAX_DIM], done: false }
    }

    pub fn cell_coords(&self, cell: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        let mut rest = cell;
        for slot in out.iter_mut().take(self.spec.dim) {
            *slot = rest % self.side;
            rest /= self.side;
        }
        out
    }

    /// Midpoint of a finest cell.
    pub fn cell_center(&self, cell: usize) -> Vec<f64> {
        let h = 1.0 / self.side as f64;
        self.cell_coords(cell)[..self.spec.dim].iter().map(|&i| (i as f64 + 0.5) * h).collect()
    }

    /// The level-`k` cube of this grid containing `cell`, if one exists.
    pub fn cube_containing(&self, cell: usize, level: u32) -> Option<DyadicCube> {
        let coords = self.cell_coords(cell);
        let c = self.side_cells(level);
        let mut index = [0u32; MAX_DIM];
        for d in 0..self.spec.dim {
            let base = self.base(level, d);
            if coords[d] < base {
                return None;
            }
            let m = (coords[d] - base) / c;
            if m >= self.counts[level as usize][d] {
                return None;
            }
            index[d] = m as u32;
        }
        Some(DyadicCube { shift: self.spec.shift, level, index })
    }

    /// `Σ_{c ∈ Q} values[c]` for every cube, indexed by cube id. Each cube's
    /// cells are added in ascending cell order.
    pub fn cube_sums(&self, values: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.total];
        for (cell, v) in values.iter().enumerate() {
            for k in 0..=self.spec.depth {
                if let Some(q) = self.cube_containing(cell, k) {
                    sums[self.cube_id(&q)] += v;
                }
            }
        }
        sums
    }

    /// The cube one level up that contains `q`.
    pub fn parent(&self, q: &DyadicCube) -> Result<DyadicCube> {
        self.check(q)?;
        if q.level == 0 {
            return Err(Error::NoParent);
        }
        let (start, _) = self.cell_box(q);
        let level = q.level - 1;
        let c = self.side_cells(level);
        let mut index = [0u32; MAX_DIM];
        for d in 0..self.spec.dim {
            let base = self.base(level, d);
            if start[d] < base {
                return Err(Error::NoParent);
            }
            let m = (start[d] - base) / c;
            if m >= self.counts[level as usize][d] {
                return Err(Error::NoParent);
            }
            index[d] = m as u32;
        }
        Ok(DyadicCube { shift: q.shift, level, index })
    }

    /// The `2^n` cubes one level down; empty at the finest level.
    pub fn children(&self, q: &DyadicCube) -> Vec<DyadicCube> {
        if q.level >= self.spec.depth {
            return Vec::new();
        }
        let level = q.level + 1;
        let (start, c) = self.cell_box(q);
        let half = c / 2;
        let n = self.spec.dim;
        (0..1usize << n)
            .map(|bits| {
                let mut index = [0u32; MAX_DIM];
                for d in 0..n {
                    let s = start[d] + if bits >> d & 1 == 1 { half } else { 0 };
                    index[d] = ((s - self.base(level, d)) / half) as u32;
                }
                DyadicCube { shift: q.shift, level, index }
            })
            .collect()
    }

    /// Cubes of the grid with no parent inside the grid. For the standard grid
    /// this is the root alone.
    pub fn top_cubes(&self) -> Vec<DyadicCube> {
        self.cubes().filter(|q| q.level == 0 || self.parent(q).is_err()).collect()
    }

    pub fn relation(&self, q: &DyadicCube, r: &DyadicCube) -> Result<Relation> {
        if q.shift != r.shift {
            return Err(Error::ShiftMismatch);
        }
        self.check(q)?;
        self.check(r)?;
        let (qs, qc) = self.cell_box(q);
        let (rs, rc) = self.cell_box(r);
        let mut disjoint = false;
        let mut q_in_r = true;
        let mut r_in_q = true;
        for d in 0..self.spec.dim {
            let (a, b) = (qs[d], qs[d] + qc);
            let (c, e) = (rs[d], rs[d] + rc);
            if b <= c || e <= a {
                disjoint = true;
            }
            q_in_r &= c <= a && b <= e;
            r_in_q &= a <= c && e <= b;
        }
        Ok(match (disjoint, q_in_r, r_in_q) {
            (true, _, _) => Relation::Disjoint,
            (false, true, true) => Relation::Equal,
            (false, true, false) => Relation::QinR,
            (false, false, true) => Relation::RinQ,
            (false, false, false) => unreachable!("dyadic cubes of one grid never partially overlap"),
        })
    }
}

/// Odometer over the finest cells of a cube.
pub struct CellIter {
    dim: usize,
    side: usize,
    start: [usize; MAX_DIM],
    len: usize,
    pos: [usize; MAX_DIM],
    done: bool,
}

impl Iterator for CellIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.done {
            return None;
        }
        let mut idx = 0;
        for d in (0..self.dim).rev() {
            idx = idx * self.side + self.start[d] + self.pos[d];
        }
        let mut d = 0;
        loop {
            if d == self.dim {
                self.done = true;
                break;
            }
            self.pos[d] += 1;
            if self.pos[d] < self.len {
                break;
            }
            self.pos[d] = 0;
            d += 1;
        }
        Some(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(grid: &Grid, level: u32, i: u32) -> DyadicCube {
        DyadicCube { shift: grid.spec().shift, level, index: [i, 0, 0] }
    }

    #[test]
    fn cube_counts() {
        assert_eq!(Grid::standard(1, 2).unwrap().cube_count(), 7);
        assert_eq!(Grid::standard(2, 1).unwrap().cube_count(), 5);
        assert_eq!(Grid::standard(3, 2).unwrap().cube_count(), 1 + 8 + 64);
    }

    #[test]
    fn rejects_bad_shift() {
        let spec = GridSpec::shifted(1, 3, &[3]);
        assert!(matches!(Grid::new(spec), Err(Error::InvalidGrid(_))));
        assert!("n=1,L=3,a=5".parse::<GridSpec>().is_err());
    }

    #[test]
    fn parse_and_display() {
        let s: GridSpec = "n=2,L=3,a=12".parse().unwrap();
        assert_eq!(s.shift(), &[1, 2]);
        assert_eq!(s.to_string(), "n=2,L=3,a=12");
        let t: GridSpec = "n=1, L=4".parse().unwrap();
        assert!(t.is_standard());
        let u: GridSpec = "n=2,L=2,a=1".parse().unwrap();
        assert_eq!(u.shift(), &[1, 1]);
    }

    #[test]
    fn relation_examples() {
        let g = Grid::standard(1, 2).unwrap();
        let half = cube(&g, 1, 0);
        let quarter = cube(&g, 2, 0);
        let right = cube(&g, 1, 1);
        assert_eq!(g.relation(&half, &quarter).unwrap(), Relation::RinQ);
        assert_eq!(g.relation(&quarter, &half).unwrap(), Relation::QinR);
        assert_eq!(g.relation(&half, &right).unwrap(), Relation::Disjoint);
        assert_eq!(g.relation(&half, &half).unwrap(), Relation::Equal);
    }

    #[test]
    fn relation_across_shifts_is_an_error() {
        let g = Grid::standard(1, 2).unwrap();
        let h = Grid::new(GridSpec::shifted(1, 2, &[1])).unwrap();
        let q = cube(&g, 1, 0);
        let r = h.level_cubes(1).next().unwrap();
        assert!(matches!(g.relation(&q, &r), Err(Error::ShiftMismatch)));
    }

    #[test]
    fn parent_examples() {
        let g = Grid::standard(1, 2).unwrap();
        assert_eq!(g.parent(&cube(&g, 2, 0)).unwrap(), cube(&g, 1, 0));
        assert_eq!(g.parent(&cube(&g, 2, 3)).unwrap(), cube(&g, 1, 1));
        assert!(matches!(g.parent(&cube(&g, 0, 0)), Err(Error::NoParent)));
    }

    #[test]
    fn parent_children_roundtrip() {
        for spec in ["n=1,L=4", "n=2,L=3,a=12", "n=3,L=2,a=2"] {
            let g = Grid::new(spec.parse().unwrap()).unwrap();
            for q in g.cubes() {
                for c in g.children(&q) {
                    assert!(g.contains_cube(&c));
                    assert_eq!(g.parent(&c).unwrap(), q);
                    assert_eq!(g.relation(&q, &c).unwrap(), Relation::RinQ);
                }
            }
        }
    }

    #[test]
    fn ids_are_dense_and_invertible() {
        let g = Grid::new("n=2,L=3,a=21".parse().unwrap()).unwrap();
        for (id, q) in g.cubes().enumerate() {
            assert_eq!(g.cube_id(&q), id);
        }
    }

    #[test]
    fn levels_tile_the_standard_root() {
        for spec in ["n=1,L=5", "n=2,L=3"] {
            let g = Grid::new(spec.parse().unwrap()).unwrap();
            for k in 0..=g.depth() {
                let mut hits = vec![0u8; g.cell_count()];
                let mut mass = 0.0;
                for q in g.level_cubes(k) {
                    mass += g.measure(&q);
                    assert_eq!(g.cells(&q).count(), g.cube_cell_count(&q));
                    for c in g.cells(&q) {
                        hits[c] += 1;
                    }
                }
                assert!(hits.iter().all(|&h| h == 1));
                assert!((mass - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn shifted_grid_keeps_only_contained_cubes() {
        // offset of a=1 at L=3 is round(8/3) = 3 cells
        let g = Grid::new(GridSpec::shifted(1, 3, &[1])).unwrap();
        assert_eq!(g.level_count(0), 0);
        assert_eq!(g.level_count(1), 1);
        assert_eq!(g.level_count(2), 3);
        assert_eq!(g.level_count(3), 8);
        let top: Vec<_> = g.top_cubes().iter().map(|q| g.bounds(q)[0]).collect();
        assert!(top.contains(&(0.375, 0.875)));
        for q in g.cubes() {
            let (lo, hi) = g.bounds(&q)[0];
            assert!(lo >= 0.0 && hi <= 1.0);
        }
    }

    #[test]
    fn cube_containing_agrees_with_cells() {
        let g = Grid::new("n=2,L=3,a=10".parse().unwrap()).unwrap();
        for q in g.cubes() {
            for c in g.cells(&q) {
                assert_eq!(g.cube_containing(c, q.level), Some(q));
            }
        }
    }
}
