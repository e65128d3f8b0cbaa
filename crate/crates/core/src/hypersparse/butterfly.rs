//! k-ary butterfly reduce-scatter of CCSR matrices, simulated over logical
//! partitions in one address space.
//!
//! Each round splits every active participant group into at most `k`
//! contiguous subgroups. A participant keeps the rows owned by its own
//! subgroup and hands the rows owned by each other subgroup to one partner
//! there (recursive halving generalized to `k` ways). Receivers sum what
//! they get with [`ccsr_sum`]. When every group is a single participant,
//! participant `p` holds row block `p` of the total sum. Row blocks have
//! `ceil(rows / P)` rows; the last block may be short or empty.

use crate::error::{Error, Result};
use crate::hypersparse::{ccsr_sum, CcsrMatrix};

/// Summation order used by the reduce-scatter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReduceOrder {
    /// Sum received pieces at every round, as a real collective would.
    Eager,
    /// Carry pieces tagged by source partition and fold them in partition
    /// order at the end, so results are bit-identical for every `k` and to a
    /// sequential left fold.
    #[default]
    Canonical,
}

#[derive(Debug, Clone)]
pub struct ReduceScatter {
    pub shards: Vec<CcsrMatrix>,
    pub rounds: usize,
    pub block_rows: u64,
}

impl ReduceScatter {
    /// The sparse gather: concatenation of the shards by row block.
    pub fn gather(&self) -> Result<CcsrMatrix> {
        CcsrMatrix::concat_rows(&self.shards)
    }
}

enum Held {
    Summed(CcsrMatrix),
    Tagged(Vec<(usize, CcsrMatrix)>),
}

impl Held {
    fn restrict(&self, start: u64, end: u64) -> Held {
        match self {
            Held::Summed(m) => Held::Summed(m.row_range(start, end)),
            Held::Tagged(parts) => Held::Tagged(
                parts
                    .iter()
                    .map(|(src, m)| (*src, m.row_range(start, end)))
                    .collect(),
            ),
        }
    }

    /// Combines pieces, given in increasing sender order.
    fn combine(pieces: Vec<Held>) -> Result<Held> {
        let mut it = pieces.into_iter();
        let first = it.next().expect("at least the local piece");
        match first {
            Held::Summed(mut acc) => {
                for p in it {
                    let Held::Summed(m) = p else { unreachable!() };
                    acc = ccsr_sum(&acc, &m)?;
                }
                Ok(Held::Summed(acc))
            }
            Held::Tagged(mut acc) => {
                for p in it {
                    let Held::Tagged(m) = p else { unreachable!() };
                    acc.extend(m);
                }
                acc.sort_by_key(|(src, _)| *src);
                Ok(Held::Tagged(acc))
            }
        }
    }

    fn finish(self, rows: u64, cols: u64) -> Result<CcsrMatrix> {
        match self {
            Held::Summed(m) => Ok(m),
            Held::Tagged(parts) => parts
                .into_iter()
                .try_fold(CcsrMatrix::empty(rows, cols), |acc, (_, m)| ccsr_sum(&acc, &m)),
        }
    }
}

pub fn butterfly_reduce_scatter(
    parts: &[CcsrMatrix],
    k: usize,
    order: ReduceOrder,
) -> Result<ReduceScatter> {
    let p = parts.len();
    if p == 0 {
        return Err(Error::param("reduce-scatter needs at least one partition"));
    }
    if k < 2 {
        return Err(Error::param(format!("branching factor {k} < 2")));
    }
    let (rows, cols) = (parts[0].global_rows(), parts[0].global_cols());
    if parts
        .iter()
        .any(|m| m.global_rows() != rows || m.global_cols() != cols)
    {
        return Err(Error::dim("reduce-scatter partitions differ in global shape"));
    }
    let block_rows = rows.div_ceil(p as u64).max(1);
    let block_start = |b: usize| (b as u64 * block_rows).min(rows);

    let mut held: Vec<Held> = parts
        .iter()
        .enumerate()
        .map(|(src, m)| match order {
            ReduceOrder::Eager => Held::Summed(m.clone()),
            ReduceOrder::Canonical => Held::Tagged(vec![(src, m.clone())]),
        })
        .collect();

    let mut groups: Vec<(usize, usize)> = vec![(0, p)];
    let mut rounds = 0;
    while groups.iter().any(|&(lo, hi)| hi - lo > 1) {
        rounds += 1;
        let mut inbox: Vec<Vec<(usize, Held)>> = (0..p).map(|_| Vec::new()).collect();
        let mut next_groups = Vec::new();
        for &(lo, hi) in &groups {
            let size = hi - lo;
            if size == 1 {
                next_groups.push((lo, hi));
                continue;
            }
            let width = size.div_ceil(k.min(size));
            let subgroups: Vec<(usize, usize)> = (lo..hi)
                .step_by(width)
                .map(|s| (s, (s + width).min(hi)))
                .collect();
            for &(slo, shi) in &subgroups {
                for member in slo..shi {
                    let j = member - slo;
                    for &(glo, ghi) in &subgroups {
                        let target = if glo == slo {
                            member
                        } else {
                            glo + j % (ghi - glo)
                        };
                        let piece = held[member].restrict(block_start(glo), block_start(ghi));
                        inbox[target].push((member, piece));
                    }
                }
            }
            next_groups.extend(subgroups);
        }
        for (slot, mut pieces) in held.iter_mut().zip(inbox) {
            if pieces.is_empty() {
                continue;
            }
            pieces.sort_by_key(|(src, _)| *src);
            *slot = Held::combine(pieces.into_iter().map(|(_, h)| h).collect())?;
        }
        groups = next_groups;
    }

    let shards = held
        .into_iter()
        .map(|h| h.finish(rows, cols))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReduceScatter {
        shards,
        rounds,
        block_rows,
    })
}
