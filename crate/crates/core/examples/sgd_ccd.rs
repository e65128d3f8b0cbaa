//! CCD++ and SGD on the same problem as ALS, compared on wall-clock time.

use sptc::optim::{run, Algorithm, SolverConfig};
use sptc::tensor::gen::{gen_low_rank, LowRankConfig, ValueLaw};
use sptc::tensor::{RngState, Shape};

fn main() -> sptc::Result<()> {
    let shape = Shape::new(vec![60, 60, 60])?;
    let truth = gen_low_rank(&LowRankConfig::new(shape, 5, 0.1).law(ValueLaw::Gaussian), RngState::new(3))?;

    for algo in [Algorithm::Als, Algorithm::Ccd, Algorithm::Sgd] {
        let mut cfg = SolverConfig::new(algo, "ls", 5);
        cfg.seed = 3;
        if algo == Algorithm::Sgd {
            // one record per 20 iterations
            cfg.max_iters = 400;
            cfg.step = 5e-3;
            cfg.sample_rate = 0.05;
        } else {
            cfg.max_iters = 15;
        }
        let tr = run(&truth.tensor, &cfg)?;
        println!("{algo}:");
        for r in &tr.records {
            println!("  iter {:>3}  {:>7.3}s  rmse {:.3e}", r.iter, r.elapsed_s, r.metric);
        }
    }
    Ok(())
}
