//! All-at-once multi-tensor kernels.
//!
//! Work is split into a fixed set of contiguous nonzero ranges whose
//! boundaries depend only on the tensor, never on the thread count. Each
//! range produces a private result and results are merged in range order,
//! so outputs are bit-identical under any rayon pool size.

mod mttkrp;
mod solve;
mod tttp;

use std::ops::Range;

pub use mttkrp::mttkrp;
pub use solve::{
    cholesky_solve, normal_blocks, solve_factor, solve_factor_with_blocks, FactoredBlocks,
    NormalBlocks, SolveOptions, DEFAULT_BUFFER_ROWS,
};
pub use tttp::{sddmm, slices_for_budget, tttp, tttp_auto, DEFAULT_TTTP_BUDGET};

use crate::error::{Error, Result};
use crate::tensor::{FactorMatrix, SparseTensor};

const CHUNK_ENTRIES: usize = 1 << 15;
const MAX_CHUNKS: usize = 16;

/// Contiguous entry ranges aligned to last-mode fiber boundaries.
pub(crate) fn entry_chunks(t: &SparseTensor) -> Vec<Range<usize>> {
    let m = t.nnz();
    let n = m.div_ceil(CHUNK_ENTRIES).clamp(1, MAX_CHUNKS);
    let last = t.coords(t.order() - 1);
    let keys = t.keys();
    let fiber = |e: usize| keys[e] - last[e] as u64;
    let mut bounds = vec![0];
    for c in 1..n {
        let mut b = (c * m / n).max(*bounds.last().unwrap());
        while b > 0 && b < m && fiber(b) == fiber(b - 1) {
            b += 1;
        }
        if b < m && b > *bounds.last().unwrap() {
            bounds.push(b);
        }
    }
    bounds.push(m);
    bounds.windows(2).map(|w| w[0]..w[1]).collect()
}

/// Validates MTTKRP-style operands and returns the shared rank.
pub(crate) fn check_mttkrp_args(
    t: &SparseTensor,
    factors: &[&FactorMatrix],
    mode: usize,
) -> Result<usize> {
    let order = t.order();
    if mode >= order {
        return Err(Error::param(format!("mode {mode} out of range for order {order}")));
    }
    if factors.len() != order {
        return Err(Error::dim(format!(
            "{} factors for an order-{order} tensor",
            factors.len()
        )));
    }
    let rank = if order == 1 {
        factors[0].rank()
    } else {
        factors[if mode == 0 { 1 } else { 0 }].rank()
    };
    for (n, f) in factors.iter().enumerate() {
        if n == mode && order > 1 {
            continue;
        }
        if f.rank() != rank {
            return Err(Error::dim(format!(
                "factor {n} has rank {} but expected {rank}",
                f.rank()
            )));
        }
        if f.rows() != t.shape().dim(n) {
            return Err(Error::dim(format!(
                "factor {n} has {} rows but mode {n} has extent {}",
                f.rows(),
                t.shape().dim(n)
            )));
        }
    }
    Ok(rank)
}

/// Validates TTTP operands and returns the shared rank.
pub(crate) fn check_tttp_args(t: &SparseTensor, factors: &[Option<&FactorMatrix>]) -> Result<usize> {
    if factors.len() != t.order() {
        return Err(Error::dim(format!(
            "{} factor slots for an order-{} tensor",
            factors.len(),
            t.order()
        )));
    }
    let mut rank = None;
    for (n, f) in factors.iter().enumerate() {
        let Some(f) = f else { continue };
        if f.rows() != t.shape().dim(n) {
            return Err(Error::dim(format!(
                "factor {n} has {} rows but mode {n} has extent {}",
                f.rows(),
                t.shape().dim(n)
            )));
        }
        match rank {
            None => rank = Some(f.rank()),
            Some(r) if r != f.rank() => {
                return Err(Error::dim(format!(
                    "factor {n} has rank {} but expected {r}",
                    f.rank()
                )))
            }
            _ => {}
        }
    }
    rank.ok_or_else(|| Error::param("TTTP needs at least one factor"))
}
