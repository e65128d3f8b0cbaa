use super::{omega, CompletionState, SolverConfig};
use crate::error::Result;
use crate::kernels::mttkrp;
use crate::loss::{derivative_tensors, model_at_omega, Loss};
use crate::tensor::{sample, SparseTensor};

/// One stochastic gradient sweep on a Bernoulli sample of the observed
/// entries:
///
/// `A_n <- A_n - step * (mttkrp(phi'_S, n) + 2 reg rate A_n)`.
///
/// All gradients are taken at the pre-update factors. For least squares
/// `-phi' = 2 (t - m)`, so this is the residual form
/// `A_n + 2 step mttkrp(R_S, n) - 2 step reg rate A_n`.
pub fn sgd_sweep(
    t: &SparseTensor,
    state: &mut CompletionState,
    cfg: &SolverConfig,
    loss: &dyn Loss,
) -> Result<()> {
    let s = sample(t, cfg.sample_rate, state.sample_rng())?;
    if s.is_empty() {
        return Ok(());
    }
    let grads = {
        let f = state.refs();
        let m = model_at_omega(&omega(&s), &f)?;
        let (d1, _) = derivative_tensors(loss, &s, &m)?;
        (0..t.order())
            .map(|n| mttkrp(&d1, &f, n))
            .collect::<Result<Vec<_>>>()?
    };
    let shrink = 1.0 - 2.0 * cfg.step * cfg.reg * cfg.sample_rate;
    for (a, g) in state.factors.iter_mut().zip(&grads) {
        a.scale(shrink);
        a.axpy(-cfg.step, g);
    }
    Ok(())
}
