//! Executable checks of the weighted estimates: bounds assembled from
//! weight constants, empirical ratios, scaling slopes and extremal search.

pub mod bounds;
pub mod extremal;
pub mod ratios;
pub mod slope;
