//! Recover an exactly low-rank tensor from 5% of its entries with ALS.

use sptc::loss::rmse;
use sptc::optim::{run_from, Algorithm, CompletionState, Init, SolverConfig};
use sptc::loss::LeastSquares;
use sptc::tensor::gen::{gen_low_rank, LowRankConfig, ValueLaw};
use sptc::tensor::{RngState, Shape};

fn main() -> sptc::Result<()> {
    let shape = Shape::new(vec![100, 100, 100])?;
    let truth = gen_low_rank(
        &LowRankConfig::new(shape.clone(), 10, 0.05).law(ValueLaw::Gaussian),
        RngState::new(5),
    )?;
    println!("{} observed entries", truth.tensor.nnz());

    let mut cfg = SolverConfig::new(Algorithm::Als, "ls", 10);
    cfg.max_iters = 15;
    cfg.init = Init::Gaussian;
    cfg.seed = 5;
    let mut state = CompletionState::init(&shape, &cfg);
    let trace = run_from(&truth.tensor, &cfg, &LeastSquares, &mut state)?;
    for r in &trace.records {
        println!("sweep {:>2}  {:>8.3}s  objective {:.3e}  rmse {:.3e}", r.iter, r.elapsed_s, r.objective, r.metric);
    }

    // the fitted model also predicts entries it never saw
    let held_out = gen_low_rank(
        &LowRankConfig::new(shape, 10, 0.01).law(ValueLaw::Gaussian),
        RngState::new(5),
    );
    if let Ok(h) = held_out {
        println!("rmse on a fresh 1% mask: {:.3e}", rmse(&h.tensor, &state.refs())?);
    }
    Ok(())
}
