use super::{omega, CompletionState, SolverConfig};
use crate::error::Result;
use crate::kernels::{mttkrp, tttp};
use crate::loss::{derivative_tensors, model_at_omega, Loss};
use crate::tensor::{FactorMatrix, SparseTensor};

/// One CCD++ sweep: for each rank column `r`, update column `r` of every
/// factor in mode order with the others fixed.
///
/// Least squares uses the closed form `a / (reg + b)` with the residual
/// that excludes column `r`; entries with `reg + b == 0` keep their value.
/// Other losses take single-variable Newton steps until the relative step
/// drops below `inner_tol` or `inner_max` steps are done.
pub fn ccd_sweep(
    t: &SparseTensor,
    state: &mut CompletionState,
    cfg: &SolverConfig,
    loss: &dyn Loss,
) -> Result<()> {
    let order = t.order();
    let rank = state.rank();
    let omega = omega(t);
    let mut cols: Vec<Vec<FactorMatrix>> = state
        .factors
        .iter()
        .map(|f| (0..rank).map(|r| f.column_matrix(r)).collect())
        .collect();
    let mut model = model_at_omega(&omega, &state.refs())?;
    let ls = loss.id() == "ls";
    let mut resid: Vec<f64> = t
        .values()
        .iter()
        .zip(model.values())
        .map(|(t, m)| t - m)
        .collect();

    for r in 0..rank {
        if ls {
            let c = rank_one(&omega, &cols, r, None)?;
            let rho: Vec<f64> = resid.iter().zip(c.values()).map(|(a, b)| a + b).collect();
            let rho = t.with_values(rho)?;
            for n in 0..order {
                let a = mttkrp(&rho, &column_refs(&cols, r), n)?;
                let squares: Vec<FactorMatrix> =
                    cols.iter().map(|c| c[r].map(|v| v * v)).collect();
                let b = mttkrp(&omega, &squares.iter().collect::<Vec<_>>(), n)?;
                let u = &mut cols[n][r];
                for i in 0..u.rows() {
                    let den = cfg.reg + b.get(i, 0);
                    if den != 0.0 {
                        u.set(i, 0, a.get(i, 0) / den);
                    }
                }
            }
            let c = rank_one(&omega, &cols, r, None)?;
            for ((res, rho), c) in resid.iter_mut().zip(rho.values()).zip(c.values()) {
                *res = rho - c;
            }
        } else {
            for n in 0..order {
                for _ in 0..cfg.inner_max {
                    let (d1, d2) = derivative_tensors(loss, t, &model)?;
                    let g = mttkrp(&d1, &column_refs(&cols, r), n)?;
                    let squares: Vec<FactorMatrix> =
                        cols.iter().map(|c| c[r].map(|v| v * v)).collect();
                    let h = mttkrp(&d2, &squares.iter().collect::<Vec<_>>(), n)?;
                    let u = &cols[n][r];
                    let delta = FactorMatrix::from_fn(u.rows(), 1, |i, _| {
                        let den = h.get(i, 0) + 2.0 * cfg.reg;
                        if den > 0.0 {
                            -(g.get(i, 0) + 2.0 * cfg.reg * u.get(i, 0)) / den
                        } else {
                            0.0
                        }
                    });
                    let dm = rank_one(&omega, &cols, r, Some((n, &delta)))?;
                    for (m, d) in model.values_mut().iter_mut().zip(dm.values()) {
                        *m += d;
                    }
                    cols[n][r].axpy(1.0, &delta);
                    if delta.frob_norm() <= cfg.inner_tol * cols[n][r].frob_norm() {
                        break;
                    }
                }
            }
        }
    }

    for (f, c) in state.factors.iter_mut().zip(&cols) {
        for (r, col) in c.iter().enumerate() {
            f.set_column(r, col.as_slice());
        }
    }
    Ok(())
}

fn column_refs(cols: &[Vec<FactorMatrix>], r: usize) -> Vec<&FactorMatrix> {
    cols.iter().map(|c| &c[r]).collect()
}

/// Values of the rank-one term for column `r`, optionally with one mode's
/// column swapped for `replace`.
fn rank_one(
    omega: &SparseTensor,
    cols: &[Vec<FactorMatrix>],
    r: usize,
    replace: Option<(usize, &FactorMatrix)>,
) -> Result<SparseTensor> {
    let f: Vec<Option<&FactorMatrix>> = cols
        .iter()
        .enumerate()
        .map(|(n, c)| match replace {
            Some((m, x)) if m == n => Some(x),
            _ => Some(&c[r]),
        })
        .collect();
    tttp(omega, &f, 1)
}
