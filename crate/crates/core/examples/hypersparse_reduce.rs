//! Matricize a sparse tensor into the doubly-compressed CCSR layout, then
//! reduce-scatter partial sums across simulated partitions with a k-ary
//! butterfly.

use sptc::hypersparse::{butterfly_reduce_scatter, ccsr_sum, matricize_to_ccsr, ttm, CcsrMatrix, ReduceOrder};
use sptc::tensor::gen::random_sparse;
use sptc::tensor::{FactorMatrix, RngState, Shape};

fn main() -> sptc::Result<()> {
    // 10^6 x 10^3 once the first two modes are merged, but only 5000 nonzeros
    let shape = Shape::new(vec![1000, 1000, 1000])?;
    let t = random_sparse(&shape, 5_000, RngState::new(3))?;
    let m = matricize_to_ccsr(&t, &[0, 1], &[2])?;
    println!(
        "CCSR: {} x {}, {} nonzero rows, {} bytes",
        m.global_rows(),
        m.global_cols(),
        m.num_nonzero_rows(),
        m.storage_bytes()
    );

    // sparse TTM keeps only the nonzero fibers
    let w = FactorMatrix::from_fn(1000, 4, |i, r| ((i + r) % 7) as f64);
    let z = ttm(&t, &w, 2)?;
    println!("ttm over mode 2: {} nonzero fibers of length {}", z.len(), z.rank());

    // eight partitions each hold a partial sum of the same global matrix
    let parts: Vec<CcsrMatrix> = (0..8)
        .map(|p| {
            let t = random_sparse(&Shape::new(vec![64, 64])?, 200, RngState::new(100 + p))?;
            matricize_to_ccsr(&t, &[0], &[1])
        })
        .collect::<sptc::Result<_>>()?;
    let sequential = parts[1..].iter().try_fold(parts[0].clone(), |acc, m| ccsr_sum(&acc, m))?;
    for k in [2, 3, 4] {
        let rs = butterfly_reduce_scatter(&parts, k, ReduceOrder::Canonical)?;
        let nnz: Vec<usize> = rs.shards.iter().map(|s| s.nnz()).collect();
        println!(
            "k={k}: {} rounds, shard nnz {nnz:?}, gather equals sequential sum: {}",
            rs.rounds,
            rs.gather()? == sequential
        );
    }
    Ok(())
}
