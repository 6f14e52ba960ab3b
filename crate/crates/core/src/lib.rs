//! Exact computations on dyadic grids: weight constants, sparse operators,
//! weighted maximal functions, Calderon-Zygmund decompositions, Lorentz
//! norms, and a harness comparing empirical operator norms with the bounds
//! assembled from weight constants.
//!
//! ```
//! use dyadic_lab::constants::ap_constant;
//! use dyadic_lab::function::Weight;
//! use dyadic_lab::grid::Grid;
//!
//! let grids = Grid::all_shifts(1, 4).unwrap();
//! let w = Weight::lebesgue(&grids[0]);
//! assert!((ap_constant(&w, 2.0, &grids).unwrap().value - 1.0).abs() < 1e-12);
//! ```

pub mod config;
pub mod constants;
pub mod cz;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod function;
pub mod grid;
pub mod lorentz;
pub mod maximal;
pub mod report;
pub mod sparse;
pub mod synth;
pub mod harness;

// Guide chapters are compiled as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/functions.md")]
    mod functions {}
    #[doc = include_str!("../../../book/src/constants.md")]
    mod constants {}
    #[doc = include_str!("../../../book/src/sparse.md")]
    mod sparse {}
    #[doc = include_str!("../../../book/src/maximal.md")]
    mod maximal {}
    #[doc = include_str!("../../../book/src/cz.md")]
    mod cz {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
