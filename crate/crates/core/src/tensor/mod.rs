//! Sparse tensors, factor matrices, index arithmetic, sampling and
//! synthetic data.

mod factor;
pub mod gen;
mod ops;
mod rng;
mod shape;
mod sparse;

pub use factor::{refs, FactorMatrix};
pub use ops::{counting_sort_by_mode, omega_of, sample, ModeGrouping};
pub use rng::{RngState, RNG_ALGORITHM};
pub use shape::Shape;
pub use sparse::SparseTensor;
