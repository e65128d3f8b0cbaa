//! Plug a new elementwise loss into the registry and fit with it.
//!
//! The registry checks the analytic derivatives against finite differences
//! before accepting a loss, so a wrong `dphi` is caught at registration.

use std::sync::Arc;

use sptc::loss::{Loss, LossRegistry};
use sptc::optim::{run_from, Algorithm, CompletionState, SolverConfig};
use sptc::tensor::gen::{gen_low_rank, LowRankConfig};
use sptc::tensor::{RngState, Shape};

/// Pseudo-Huber: quadratic near zero, linear in the tails.
#[derive(Debug)]
struct PseudoHuber {
    delta: f64,
}

impl Loss for PseudoHuber {
    fn id(&self) -> &str {
        "pseudo-huber"
    }
    fn phi(&self, t: f64, m: f64) -> f64 {
        let d2 = self.delta * self.delta;
        d2 * ((1.0 + (m - t).powi(2) / d2).sqrt() - 1.0)
    }
    fn dphi(&self, t: f64, m: f64) -> f64 {
        let r = m - t;
        r / (1.0 + r * r / (self.delta * self.delta)).sqrt()
    }
    fn d2phi(&self, t: f64, m: f64) -> f64 {
        let r = m - t;
        (1.0 + r * r / (self.delta * self.delta)).powf(-1.5)
    }
}

#[derive(Debug)]
struct Broken;

impl Loss for Broken {
    fn id(&self) -> &str {
        "broken"
    }
    fn phi(&self, t: f64, m: f64) -> f64 {
        (t - m).powi(2)
    }
    fn dphi(&self, t: f64, m: f64) -> f64 {
        m - t // missing the factor 2
    }
    fn d2phi(&self, _t: f64, _m: f64) -> f64 {
        2.0
    }
}

fn main() -> sptc::Result<()> {
    let mut registry = LossRegistry::with_builtins();
    registry.register(Arc::new(PseudoHuber { delta: 1.0 }))?;
    match registry.register(Arc::new(Broken)) {
        Ok(()) => println!("broken loss accepted?"),
        Err(e) => println!("rejected: {e}"),
    }

    let shape = Shape::new(vec![30, 30, 30])?;
    let mut t = gen_low_rank(&LowRankConfig::new(shape.clone(), 3, 0.2), RngState::new(9))?.tensor;
    // a few gross outliers
    for v in t.values_mut().iter_mut().step_by(97) {
        *v += 50.0;
    }

    let loss = registry.get("pseudo-huber")?;
    let mut cfg = SolverConfig::new(Algorithm::Als, "pseudo-huber", 3);
    cfg.reg = 1e-3;
    cfg.max_iters = 10;
    let mut state = CompletionState::init(&shape, &cfg);
    let tr = run_from(&t, &cfg, loss.as_ref(), &mut state)?;
    for r in &tr.records {
        println!("iter {:>2}  normalized loss {:.4}", r.iter, r.metric);
    }
    Ok(())
}
