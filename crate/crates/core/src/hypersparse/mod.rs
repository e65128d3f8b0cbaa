//! Hypersparse matrices and the pairwise-contraction baseline.

mod butterfly;
mod ccsr;
mod ttm;

pub use butterfly::{butterfly_reduce_scatter, ReduceOrder, ReduceScatter};
pub use ccsr::{ccsr_sum, matricize_to_ccsr, CcsrMatrix};
pub use ttm::{ccsr_times_dense, pairwise_mttkrp, pairwise_tttp, ttm, SemiSparseTensor};
