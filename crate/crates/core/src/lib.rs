//! Sparse tensor completion with generalized elementwise losses.
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`]: coordinate-format sparse tensors, factor matrices, sampling
//!   and synthetic data.
//! - [`hypersparse`]: the doubly-compressed CCSR matrix, sparse TTM, the
//!   pairwise-contraction baselines and a simulated k-ary butterfly
//!   reduce-scatter.
//! - [`kernels`]: the all-at-once MTTKRP, TTTP/SDDMM and Solve Factor kernels.
//! - [`loss`]: elementwise losses, derivative tensors, objective and RMSE.
//! - [`optim`]: ALS, CCD++, SGD and (Gauss-)Newton with preconditioned CG.
//! - [`io`]: FROSTT `.tns` files and convergence traces.

pub mod cli;
pub mod error;
pub mod hypersparse;
pub mod io;
pub mod kernels;
pub mod loss;
pub mod optim;
pub mod tensor;

pub use error::{Error, Result};
