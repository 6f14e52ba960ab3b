use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("cubes belong to grids with different shifts")]
    ShiftMismatch,
    #[error("cube does not belong to this grid: {0}")]
    CubeNotInGrid(String),
    #[error("cube has no parent inside the grid")]
    NoParent,
    #[error("functions live on different grids ({0} vs {1})")]
    GridMismatch(String, String),
    #[error("value array has {got} entries, grid has {expected} cells")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
    #[error("weight must be strictly positive, cell {cell} has {value}")]
    NonPositiveWeight { cell: usize, value: f64 },
    #[error("negative value at cell {0} where a non-negative function is required")]
    Negative(usize),
    #[error("inadmissible exponents: {0}")]
    Exponents(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("function vanishes identically")]
    Degenerate,
    #[error("root average {average} exceeds the threshold {threshold}")]
    RootExceedsThreshold { average: f64, threshold: f64 },
    #[error("{0}")]
    Harness(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
