use std::ops::Range;

use rayon::prelude::*;

use super::{check_mttkrp_args, entry_chunks};
use crate::error::Result;
use crate::tensor::{FactorMatrix, SparseTensor};

/// Matricized tensor times Khatri-Rao product along `mode`:
///
/// `out[i, r] = sum over entries with mode index i of value * prod_{n != mode} factors[n][i_n, r]`.
///
/// `factors[mode]` is not read. Partial sums are accumulated along each
/// last-mode fiber so the Hadamard product with the other factor rows is
/// formed once per fiber rather than once per nonzero.
pub fn mttkrp(t: &SparseTensor, factors: &[&FactorMatrix], mode: usize) -> Result<FactorMatrix> {
    let rank = check_mttkrp_args(t, factors, mode)?;
    let rows = t.shape().dim(mode);
    let chunks = entry_chunks(t);
    if chunks.len() == 1 {
        let mut out = FactorMatrix::zeros(rows, rank);
        accumulate(t, factors, mode, rank, chunks[0].clone(), &mut out);
        return Ok(out);
    }
    let partials: Vec<FactorMatrix> = chunks
        .into_par_iter()
        .map(|range| {
            let mut out = FactorMatrix::zeros(rows, rank);
            accumulate(t, factors, mode, rank, range, &mut out);
            out
        })
        .collect();
    let mut it = partials.into_iter();
    let mut out = it.next().unwrap();
    for p in it {
        out.axpy(1.0, &p);
    }
    Ok(out)
}

fn accumulate(
    t: &SparseTensor,
    factors: &[&FactorMatrix],
    mode: usize,
    rank: usize,
    range: Range<usize>,
    out: &mut FactorMatrix,
) {
    let order = t.order();
    let values = t.values();
    if order == 1 {
        let idx = t.coords(0);
        for e in range {
            out.row_mut(idx[e]).iter_mut().for_each(|o| *o += values[e]);
        }
        return;
    }
    let last = order - 1;
    let keys = t.keys();
    let last_idx = t.coords(last);
    let fiber_end = |start: usize| {
        let base = keys[start] - last_idx[start] as u64;
        let mut e = start + 1;
        while e < range.end && keys[e] - last_idx[e] as u64 == base {
            e += 1;
        }
        e
    };
    let others: Vec<usize> = (0..last).filter(|&n| n != mode).collect();
    let mut buf = vec![0.0; rank];
    let mut e = range.start;
    while e < range.end {
        let end = fiber_end(e);
        if mode == last {
            // shared prefix product, scattered per nonzero
            buf.iter_mut().for_each(|b| *b = 1.0);
            for &n in &others {
                let row = factors[n].row(t.coords(n)[e]);
                buf.iter_mut().zip(row).for_each(|(b, &a)| *b *= a);
            }
            for f in e..end {
                let v = values[f];
                out.row_mut(last_idx[f])
                    .iter_mut()
                    .zip(&buf)
                    .for_each(|(o, &b)| *o += v * b);
            }
        } else {
            // fiber partial sum, then one Hadamard with the remaining rows
            buf.iter_mut().for_each(|b| *b = 0.0);
            let lf = factors[last];
            for f in e..end {
                let v = values[f];
                buf.iter_mut()
                    .zip(lf.row(last_idx[f]))
                    .for_each(|(b, &a)| *b += v * a);
            }
            for &n in &others {
                let row = factors[n].row(t.coords(n)[e]);
                buf.iter_mut().zip(row).for_each(|(b, &a)| *b *= a);
            }
            out.row_mut(t.coords(mode)[e])
                .iter_mut()
                .zip(&buf)
                .for_each(|(o, &b)| *o += b);
        }
        e = end;
    }
}
