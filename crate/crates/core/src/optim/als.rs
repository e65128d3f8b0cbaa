use super::{omega, CompletionState, SolverConfig};
use crate::error::Result;
use crate::kernels::{mttkrp, solve_factor, solve_factor_with_blocks, NormalBlocks};
use crate::loss::{derivative_tensors, model_at_omega, Loss};
use crate::tensor::{FactorMatrix, SparseTensor};

/// Left and right hand sides of one least-squares ALS factor solve.
#[derive(Debug, Clone)]
pub struct AlsSolve {
    pub mode: usize,
    pub blocks: NormalBlocks,
    pub rhs: FactorMatrix,
}

/// Updates every factor in mode order.
pub fn als_sweep(
    t: &SparseTensor,
    state: &mut CompletionState,
    loss: &dyn Loss,
    cfg: &SolverConfig,
) -> Result<()> {
    let omega = omega(t);
    for n in 0..t.order() {
        update(t, &omega, state, loss, cfg, n)?;
    }
    Ok(())
}

/// Re-solves a single factor with the others fixed.
pub fn als_update_mode(
    t: &SparseTensor,
    state: &mut CompletionState,
    loss: &dyn Loss,
    cfg: &SolverConfig,
    mode: usize,
) -> Result<()> {
    update(t, &omega(t), state, loss, cfg, mode)
}

fn update(
    t: &SparseTensor,
    omega: &SparseTensor,
    state: &mut CompletionState,
    loss: &dyn Loss,
    cfg: &SolverConfig,
    n: usize,
) -> Result<()> {
    if loss.id() == "ls" && !cfg.generalized_als {
        let f = state.refs();
        let rhs = mttkrp(t, &f, n)?;
        let (u, blocks) = solve_factor_with_blocks(omega, &f, &rhs, n, cfg.reg, cfg.solve)?;
        state.factors[n] = u;
        state.last_solve = Some(AlsSolve { mode: n, blocks, rhs });
        return Ok(());
    }

    state.last_solve = None;
    let mut frozen: Option<SparseTensor> = None;
    for _ in 0..cfg.inner_max {
        let delta = {
            let f = state.refs();
            let m = model_at_omega(omega, &f)?;
            let (d1, d2) = derivative_tensors(loss, t, &m)?;
            let d2 = if cfg.frozen_hessian {
                frozen.get_or_insert(d2).clone()
            } else {
                d2
            };
            let mut rhs = mttkrp(&d1, &f, n)?;
            rhs.axpy(2.0 * cfg.reg, f[n]);
            rhs.scale(-1.0);
            solve_factor(&d2, &f, &rhs, n, 2.0 * cfg.reg, cfg.solve)?
        };
        state.factors[n].axpy(1.0, &delta);
        if delta.frob_norm() <= cfg.inner_tol * state.factors[n].frob_norm() {
            break;
        }
    }
    Ok(())
}
