//! Sparse families, the fractional sparse operator and the bilinear sparse
//! form.
//!
//! A family is `η`-sparse when every member `Q` owns a set `E_Q ⊆ Q` with
//! `|E_Q| ≥ η|Q|` and the `E_Q` are pairwise disjoint.

use std::fmt;

use crate::error::{Error, Result};
use crate::exponents::{conjugate, ExponentTuple};
use crate::function::{local_average, pairing, CellSet, GridFunction, Weight};
use crate::grid::{DyadicCube, Grid, GridSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMember {
    pub cube: DyadicCube,
    pub set: CellSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseFamily {
    pub grid: GridSpec,
    pub members: Vec<SparseMember>,
    pub eta: f64,
}

/// The first broken sparseness condition.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// `E_Q` has a cell outside `Q`
    NotInside { member: usize, cell: usize },
    /// two members claim the same cell
    Overlap { first: usize, second: usize, cell: usize },
    /// `|E_Q| < η|Q|`
    TooSmall { member: usize, fraction: f64 },
    /// the cube does not belong to the family's grid
    ForeignCube { member: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotInside { member, cell } => write!(f, "member {member}: cell {cell} of E_Q lies outside Q"),
            Violation::Overlap { first, second, cell } => {
                write!(f, "members {first} and {second} both claim cell {cell}")
            }
            Violation::TooSmall { member, fraction } => write!(f, "member {member}: |E_Q|/|Q| = {fraction} < eta"),
            Violation::ForeignCube { member } => write!(f, "member {member}: cube not in the grid"),
        }
    }
}

impl SparseFamily {
    pub fn new(grid: GridSpec, members: Vec<SparseMember>, eta: f64) -> Self {
        SparseFamily { grid, members, eta }
    }

    /// The single member `(Q_0, Q_0)` of the standard grid, with `η = 1`.
    pub fn root(grid: &Grid) -> Self {
        let root = grid.level_cubes(0).next().expect("standard grid has a root");
        SparseFamily::new(*grid.spec(), vec![SparseMember { cube: root, set: CellSet::from_cube(grid, &root) }], 1.0)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `min_Q |E_Q|/|Q|`, or 1 for an empty family.
    pub fn measured_eta(&self, grid: &Grid) -> f64 {
        self.members
            .iter()
            .map(|m| m.set.len() as f64 / grid.cube_cell_count(&m.cube) as f64)
            .fold(1.0, f64::min)
    }

    pub fn validate(&self, grid: &Grid) -> std::result::Result<(), Violation> {
        let mut owner = vec![usize::MAX; grid.cell_count()];
        for (i, m) in self.members.iter().enumerate() {
            if !grid.contains_cube(&m.cube) || grid.spec() != &self.grid {
                return Err(Violation::ForeignCube { member: i });
            }
            let inside = CellSet::from_cube(grid, &m.cube);
            if let Some(&cell) = m.set.cells().iter().find(|c| !inside.contains(**c)) {
                return Err(Violation::NotInside { member: i, cell });
            }
            for &c in m.set.cells() {
                if owner[c] != usize::MAX {
                    return Err(Violation::Overlap { first: owner[c], second: i, cell: c });
                }
                owner[c] = i;
            }
            let fraction = m.set.len() as f64 / inside.len() as f64;
            if fraction < self.eta {
                return Err(Violation::TooSmall { member: i, fraction });
            }
        }
        Ok(())
    }

    /// One row per member: `shift,level,index,E-cells`, with index
    /// coordinates and cells separated by `:`.
    pub fn to_csv(&self) -> String {
        let n = self.grid.dim;
        let mut out = format!("# grid {} eta {:.16e}\nshift,level,index,cells\n", self.grid, self.eta);
        for m in &self.members {
            let shift: String = m.cube.shift[..n].iter().map(|d| d.to_string()).collect();
            let index: Vec<String> = m.cube.index[..n].iter().map(|i| i.to_string()).collect();
            let cells: Vec<String> = m.set.cells().iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("{shift},{},{},{}\n", m.cube.level, index.join(":"), cells.join(":")));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut grid = None;
        let mut eta = None;
        let mut members = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix("# grid ") {
                let (g, e) = rest
                    .split_once(" eta ")
                    .ok_or_else(|| Error::Parse(format!("bad family header `{line}`")))?;
                grid = Some(g.parse::<GridSpec>()?);
                eta = Some(e.trim().parse::<f64>().map_err(|_| Error::Parse(format!("eta `{e}`")))?);
                continue;
            }
            if line.starts_with('#') || line.starts_with("shift,") {
                continue;
            }
            let spec = grid.ok_or_else(|| Error::Parse("family CSV lacks its `# grid` header".into()))?;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Parse(format!("expected 4 columns in `{line}`")));
            }
            let num = |s: &str| s.parse::<u32>().map_err(|_| Error::Parse(format!("`{s}` in `{line}`")));
            let mut cube = DyadicCube { shift: [0; 3], level: num(cols[1])?, index: [0; 3] };
            for (d, ch) in cols[0].chars().enumerate().take(3) {
                cube.shift[d] = ch.to_digit(10).ok_or_else(|| Error::Parse(format!("shift `{}`", cols[0])))? as u8;
            }
            for (d, s) in cols[2].split(':').enumerate().take(3) {
                cube.index[d] = num(s)?;
            }
            let cells = cols[3]
                .split(':')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<usize>().map_err(|_| Error::Parse(format!("cell `{s}`"))))
                .collect::<Result<Vec<_>>>()?;
            if cube.shift[..spec.dim] != spec.shift()[..] {
                return Err(Error::ShiftMismatch);
            }
            members.push(SparseMember { cube, set: CellSet::new(cells) });
        }
        let spec = grid.ok_or_else(|| Error::Parse("family CSV lacks its `# grid` header".into()))?;
        Ok(SparseFamily::new(spec, members, eta.unwrap_or(0.0)))
    }
}

/// Stopping-time family: starting from each top cube with positive average,
/// the stopping children of a selected `Q` are the maximal proper subcubes
/// `Q'` with `⟨f⟩_{p0,Q'} ≥ ρ⟨f⟩_{p0,Q}`, and `E_Q` is `Q` minus them. The
/// recorded `η` is the measured minimum of `|E_Q|/|Q|`.
pub fn build_stopping_family(f: &GridFunction, p0: f64, grid: &Grid, rho: f64) -> Result<SparseFamily> {
    f.check_grid(grid)?;
    if !(rho > 1.0 && rho.is_finite()) {
        return Err(Error::Parameter(format!("stopping ratio rho = {rho} must exceed 1")));
    }
    if !(p0 >= 1.0 && p0.is_finite()) {
        return Err(Error::Parameter(format!("p0 = {p0} must satisfy 1 <= p0 < inf")));
    }
    let powered: Vec<f64> = f.values().iter().map(|v| v.abs().powf(p0)).collect();
    let sums = grid.cube_sums(&powered);
    let avg = |q: &DyadicCube| (sums[grid.cube_id(q)] / grid.cube_cell_count(q) as f64).powf(1.0 / p0);

    let mut stack: Vec<DyadicCube> = grid.top_cubes().into_iter().filter(|q| avg(q) > 0.0).collect();
    if stack.is_empty() {
        return Err(Error::Degenerate);
    }
    stack.reverse();
    let mut members = Vec::new();
    while let Some(q) = stack.pop() {
        let threshold = rho * avg(&q);
        let mut stopped = Vec::new();
        let mut open = grid.children(&q);
        while let Some(r) = open.pop() {
            if avg(&r) >= threshold {
                stopped.push(r);
            } else {
                open.extend(grid.children(&r));
            }
        }
        stopped.sort();
        let mut covered = vec![false; grid.cell_count()];
        for r in &stopped {
            for c in grid.cells(r) {
                covered[c] = true;
            }
        }
        let set = CellSet::new(grid.cells(&q).filter(|&c| !covered[c]).collect());
        if set.is_empty() {
            return Err(Error::Degenerate);
        }
        members.push(SparseMember { cube: q, set });
        stack.extend(stopped.into_iter().rev());
    }
    let mut family = SparseFamily::new(*grid.spec(), members, 0.0);
    family.eta = family.measured_eta(grid);
    Ok(family)
}

fn check_family(s: &SparseFamily, grid: &Grid) -> Result<()> {
    if grid.spec() != &s.grid {
        return Err(Error::GridMismatch(s.grid.to_string(), grid.spec().to_string()));
    }
    Ok(())
}

/// `A^α_S f = Σ_{Q∈S} |Q|^{α/n} ⟨|f|⟩_Q χ_Q`, members summed in order.
pub fn sparse_operator(s: &SparseFamily, f: &GridFunction, alpha: f64, grid: &Grid) -> Result<GridFunction> {
    check_family(s, grid)?;
    f.check_grid(grid)?;
    let mut out = vec![0.0; grid.cell_count()];
    for m in &s.members {
        let a = local_average(f, alpha, 1.0, grid, &m.cube)?;
        for c in grid.cells(&m.cube) {
            out[c] += a;
        }
    }
    GridFunction::from_values(grid, out)
}

/// `Σ_{Q∈S} ⟨f⟩_{α,p0,Q} χ_Q`, the `p0` version of the sparse operator.
pub fn sparse_operator_p0(
    s: &SparseFamily,
    f: &GridFunction,
    alpha: f64,
    p0: f64,
    grid: &Grid,
) -> Result<GridFunction> {
    check_family(s, grid)?;
    f.check_grid(grid)?;
    let mut out = vec![0.0; grid.cell_count()];
    for m in &s.members {
        let a = local_average(f, alpha * p0, p0, grid, &m.cube)?;
        for c in grid.cells(&m.cube) {
            out[c] += a;
        }
    }
    GridFunction::from_values(grid, out)
}

/// `Σ_j Σ_{Q∈S_j} ⟨f⟩_{p0,Q} ⟨g⟩_{α,q0',Q} |Q|`; each family is paired with
/// the grid of the same spec in `grids`.
pub fn bilinear_form(
    families: &[SparseFamily],
    f: &GridFunction,
    g: &GridFunction,
    e: &ExponentTuple,
    grids: &[Grid],
) -> Result<f64> {
    e.validate()?;
    let q0c = conjugate(e.q0);
    let mut total = 0.0;
    for s in families {
        let grid = grids
            .iter()
            .find(|gr| gr.spec() == &s.grid)
            .ok_or_else(|| Error::Parameter(format!("no grid supplied for family on {}", s.grid)))?;
        f.check_grid(grid)?;
        g.check_grid(grid)?;
        for m in &s.members {
            let a = local_average(f, 0.0, e.p0, grid, &m.cube)?;
            let b = local_average(g, e.alpha, q0c, grid, &m.cube)?;
            total += a * b * grid.measure(&m.cube);
        }
    }
    Ok(total)
}

/// `w A^α_S(w^{-1} f)`.
pub fn multiplier_eval(s: &SparseFamily, f: &GridFunction, w: &Weight, alpha: f64, grid: &Grid) -> Result<GridFunction> {
    let inner = f.mul(w.recip().as_function())?;
    sparse_operator(s, &inner, alpha, grid)?.mul(w.as_function())
}

/// `⟨A^α_S f, g⟩`, the pairing of the sparse operator against `g`.
pub fn sparse_pairing(s: &SparseFamily, f: &GridFunction, g: &GridFunction, alpha: f64, grid: &Grid) -> Result<f64> {
    pairing(&sparse_operator(s, f, alpha, grid)?, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::FunctionSpec;

    fn line(depth: u32) -> Grid {
        Grid::standard(1, depth).unwrap()
    }

    fn cube(g: &Grid, level: u32, i: u32) -> DyadicCube {
        g.level_cubes(level).nth(i as usize).unwrap()
    }

    #[test]
    fn root_family_is_valid() {
        let g = line(3);
        let s = SparseFamily::root(&g);
        assert_eq!(s.validate(&g), Ok(()));
    }

    #[test]
    fn overlapping_sets_are_reported() {
        let g = line(1);
        let left = cube(&g, 1, 0);
        let right = cube(&g, 1, 1);
        let set = CellSet::new(vec![0]);
        let s = SparseFamily::new(
            *g.spec(),
            vec![SparseMember { cube: left, set: set.clone() }, SparseMember { cube: right, set }],
            0.5,
        );
        assert!(matches!(s.validate(&g), Err(Violation::NotInside { member: 1, cell: 0 })));
        let root = cube(&g, 0, 0);
        let t = SparseFamily::new(
            *g.spec(),
            vec![
                SparseMember { cube: root, set: CellSet::new(vec![0]) },
                SparseMember { cube: left, set: CellSet::new(vec![0]) },
            ],
            0.5,
        );
        assert!(matches!(t.validate(&g), Err(Violation::Overlap { first: 0, second: 1, cell: 0 })));
    }

    #[test]
    fn stopping_family_of_constant_is_the_root() {
        let g = line(4);
        let f = GridFunction::constant(&g, 1.0).unwrap();
        let s = build_stopping_family(&f, 1.0, &g, 2.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.eta, 1.0);
    }

    #[test]
    fn stopping_family_of_first_quarter() {
        let g = line(2);
        let f = GridFunction::indicator(&g, &CellSet::new(vec![0]));
        let s = build_stopping_family(&f, 1.0, &g, 2.0).unwrap();
        let cubes: Vec<DyadicCube> = s.members.iter().map(|m| m.cube).collect();
        assert_eq!(cubes, vec![cube(&g, 0, 0), cube(&g, 1, 0), cube(&g, 2, 0)]);
        assert_eq!(s.eta, 0.5);
        assert_eq!(s.validate(&g), Ok(()));
    }

    #[test]
    fn stopping_family_rejects_zero() {
        let g = line(2);
        assert_eq!(build_stopping_family(&GridFunction::zero(&g), 1.0, &g, 2.0), Err(Error::Degenerate));
    }

    #[test]
    fn stopping_families_on_shifted_grids_are_valid() {
        for g in Grid::all_shifts(2, 4).unwrap() {
            let f = FunctionSpec::random(5).synthesize(&g).unwrap();
            let s = build_stopping_family(&f, 2.0, &g, 1.5).unwrap();
            assert_eq!(s.validate(&g), Ok(()), "{}", g.spec());
            assert!(s.eta > 0.0);
        }
    }

    #[test]
    fn operator_on_two_members() {
        let g = line(1);
        let s = SparseFamily::new(
            *g.spec(),
            vec![
                SparseMember { cube: cube(&g, 0, 0), set: CellSet::new(vec![1]) },
                SparseMember { cube: cube(&g, 1, 0), set: CellSet::new(vec![0]) },
            ],
            0.5,
        );
        let one = GridFunction::constant(&g, 1.0).unwrap();
        assert_eq!(sparse_operator(&s, &one, 0.0, &g).unwrap().values(), &[2.0, 1.0]);
        let root = SparseFamily::root(&g);
        for alpha in [0.0, 0.5] {
            assert_eq!(sparse_operator(&root, &one, alpha, &g).unwrap().values(), &[1.0, 1.0]);
        }
    }

    #[test]
    fn bilinear_form_examples() {
        let g = line(3);
        let s = SparseFamily::root(&g);
        let one = GridFunction::constant(&g, 1.0).unwrap();
        let e = ExponentTuple::new(1, 1.0, f64::INFINITY, 2.0, 2.0, 0.0).unwrap();
        let grids = [g.clone()];
        assert!((bilinear_form(std::slice::from_ref(&s), &one, &one, &e, &grids).unwrap() - 1.0).abs() < 1e-15);
        let zero = GridFunction::zero(&g);
        assert_eq!(bilinear_form(&[s], &one, &zero, &e, &grids).unwrap(), 0.0);
    }

    #[test]
    fn pairing_equals_form_with_endpoint_exponents() {
        let g = line(6);
        let f = FunctionSpec::random(1).synthesize(&g).unwrap();
        let h = FunctionSpec::random(2).synthesize(&g).unwrap();
        let s = build_stopping_family(&f, 1.0, &g, 2.0).unwrap();
        for alpha in [0.0, 0.25] {
            let e = ExponentTuple::with_alpha(1, 1.0, f64::INFINITY, 1.5, alpha).unwrap();
            let lhs = sparse_pairing(&s, &f, &h, alpha, &g).unwrap();
            let rhs = bilinear_form(std::slice::from_ref(&s), &f, &h, &e, std::slice::from_ref(&g)).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12));
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn multiplier_with_unit_weight_is_the_operator() {
        let g = line(5);
        let f = FunctionSpec::random(3).synthesize(&g).unwrap();
        let s = build_stopping_family(&f, 1.0, &g, 2.0).unwrap();
        let w = Weight::lebesgue(&g);
        assert_eq!(multiplier_eval(&s, &f, &w, 0.2, &g).unwrap(), sparse_operator(&s, &f, 0.2, &g).unwrap());
        let z = GridFunction::zero(&g);
        let w = FunctionSpec::random(4).weight(&g).unwrap();
        assert!(multiplier_eval(&s, &z, &w, 0.0, &g).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn csv_roundtrip() {
        let g = Grid::new("n=2,L=3,a=12".parse().unwrap()).unwrap();
        let f = FunctionSpec::random(6).synthesize(&g).unwrap();
        let s = build_stopping_family(&f, 1.0, &g, 2.0).unwrap();
        let back = SparseFamily::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s);
    }
}
