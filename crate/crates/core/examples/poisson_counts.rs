//! Count data under the Poisson log-link loss, fitted with the generalized
//! (inner Newton) paths of ALS, CCD++ and Gauss-Newton, and with SGD.

use sptc::loss::{LossRegistry, PoissonLogLink};
use sptc::optim::{run_from, Algorithm, CompletionState, SolverConfig};
use sptc::tensor::gen::gen_poisson_counts;
use sptc::tensor::{RngState, Shape};

fn main() -> sptc::Result<()> {
    let shape = Shape::new(vec![40, 40, 40])?;
    let data = gen_poisson_counts(&shape, 5, 0.3, 0.3, RngState::new(7))?;
    let t = &data.tensor;
    let total: f64 = t.values().iter().sum();
    println!("{} observed cells, {total} events", t.nnz());
    println!("registered losses: {:?}", LossRegistry::with_builtins().ids().collect::<Vec<_>>());

    // the exponential makes these solvers sensitive to the regularization
    for (algo, reg, iters) in [
        (Algorithm::Als, 0.1, 20),
        (Algorithm::Ccd, 1.0, 20),
        (Algorithm::GaussNewton, 3.0, 20),
        (Algorithm::Sgd, 0.1, 200),
    ] {
        let mut cfg = SolverConfig::new(algo, "poisson", 5);
        cfg.reg = reg;
        cfg.max_iters = iters;
        let loss = PoissonLogLink::new();
        let mut state = CompletionState::init(&shape, &cfg);
        let tr = run_from(t, &cfg, &loss, &mut state)?;
        let first = tr.records[0].metric;
        let last = tr.last().expect("initial record").metric;
        println!(
            "{algo:>4} (reg {reg}): normalized loss {first:.4} -> {last:.4}, exp clamped {} times",
            loss.clamp_count()
        );
    }
    Ok(())
}
