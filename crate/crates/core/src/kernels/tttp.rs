use std::borrow::Cow;

use rayon::prelude::*;

use super::{check_tttp_args, entry_chunks};
use crate::error::{Error, Result};
use crate::tensor::{FactorMatrix, SparseTensor};

/// Default memory budget for one slice of replicated factor columns.
pub const DEFAULT_TTTP_BUDGET: usize = 256 << 20;

/// Tensor-times-tensor product:
///
/// `x[i] = s[i] * sum_r prod_{n provided} factors[n][i_n, r]`.
///
/// Absent factors are skipped in the product. The rank index is processed
/// in `h_slices` column slices; each slice copies only its columns of every
/// factor, bounding the working set at `sum_n I_n * R / H` values.
pub fn tttp(
    t: &SparseTensor,
    factors: &[Option<&FactorMatrix>],
    h_slices: usize,
) -> Result<SparseTensor> {
    let rank = check_tttp_args(t, factors)?;
    if h_slices == 0 || h_slices > rank {
        return Err(Error::param(format!(
            "h_slices {h_slices} must be in 1..={rank}"
        )));
    }
    let provided: Vec<usize> = (0..t.order()).filter(|&n| factors[n].is_some()).collect();
    let chunks = entry_chunks(t);
    let mut acc = vec![0.0; t.nnz()];
    for h in 0..h_slices {
        let (c0, c1) = (h * rank / h_slices, (h + 1) * rank / h_slices);
        let sliced: Vec<Option<Cow<FactorMatrix>>> = factors
            .iter()
            .map(|f| {
                f.map(|f| {
                    if h_slices == 1 {
                        Cow::Borrowed(f)
                    } else {
                        Cow::Owned(f.columns(c0, c1))
                    }
                })
            })
            .collect();
        let mut parts: Vec<&mut [f64]> = Vec::with_capacity(chunks.len());
        let mut rest = acc.as_mut_slice();
        for r in &chunks {
            let (head, tail) = rest.split_at_mut(r.len());
            parts.push(head);
            rest = tail;
        }
        parts
            .into_par_iter()
            .zip(chunks.par_iter())
            .for_each(|(out, range)| {
                slice_products(t, &sliced, &provided, c1 - c0, range.start, out)
            });
    }
    for (a, &s) in acc.iter_mut().zip(t.values()) {
        *a *= s;
    }
    t.with_values(acc)
}

/// Adds `sum_r prod_n a_n[i_n, r]` over one column slice into `out`, which
/// covers entries `start..start + out.len()`.
fn slice_products(
    t: &SparseTensor,
    sliced: &[Option<Cow<FactorMatrix>>],
    provided: &[usize],
    width: usize,
    start: usize,
    out: &mut [f64],
) {
    let last = t.order() - 1;
    let end = start + out.len();
    let Some(last_f) = sliced[last].as_ref().filter(|_| provided.len() > 1) else {
        // no fiber reuse: full product per nonzero
        let mut buf = vec![0.0; width];
        for (e, o) in (start..end).zip(out.iter_mut()) {
            buf.iter_mut().for_each(|b| *b = 1.0);
            for &n in provided {
                let row = sliced[n].as_ref().unwrap().row(t.coords(n)[e]);
                buf.iter_mut().zip(row).for_each(|(b, &a)| *b *= a);
            }
            *o += buf.iter().sum::<f64>();
        }
        return;
    };
    let keys = t.keys();
    let last_idx = t.coords(last);
    let mut prefix = vec![0.0; width];
    let mut e = start;
    while e < end {
        let base = keys[e] - last_idx[e] as u64;
        prefix.iter_mut().for_each(|p| *p = 1.0);
        for &n in &provided[..provided.len() - 1] {
            let row = sliced[n].as_ref().unwrap().row(t.coords(n)[e]);
            prefix.iter_mut().zip(row).for_each(|(p, &a)| *p *= a);
        }
        while e < end && keys[e] - last_idx[e] as u64 == base {
            let row = last_f.row(last_idx[e]);
            out[e - start] += prefix.iter().zip(row).map(|(p, a)| p * a).sum::<f64>();
            e += 1;
        }
    }
}

/// Number of column slices that keeps one slice of the provided factors
/// within `budget_bytes`.
pub fn slices_for_budget(factors: &[Option<&FactorMatrix>], budget_bytes: usize) -> usize {
    let rank = factors.iter().flatten().map(|f| f.rank()).next().unwrap_or(1);
    let bytes: usize = factors
        .iter()
        .flatten()
        .map(|f| f.rows() * f.rank() * std::mem::size_of::<f64>())
        .sum();
    bytes.div_ceil(budget_bytes.max(1)).clamp(1, rank)
}

/// [`tttp`] with the slice count chosen from [`DEFAULT_TTTP_BUDGET`].
pub fn tttp_auto(t: &SparseTensor, factors: &[Option<&FactorMatrix>]) -> Result<SparseTensor> {
    tttp(t, factors, slices_for_budget(factors, DEFAULT_TTTP_BUDGET))
}

/// Sampled dense-dense matrix product `S .* (U V^T)`: the order-2 TTTP.
pub fn sddmm(s: &SparseTensor, u: &FactorMatrix, v: &FactorMatrix) -> Result<SparseTensor> {
    if s.order() != 2 {
        return Err(Error::dim(format!("SDDMM needs a matrix, got order {}", s.order())));
    }
    tttp(s, &[Some(u), Some(v)], 1)
}
