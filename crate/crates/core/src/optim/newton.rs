use super::{omega, CompletionState, SolverConfig};
use crate::error::{Error, Result};
use crate::kernels::{mttkrp, normal_blocks, tttp, FactoredBlocks, SolveOptions};
use crate::loss::{derivative_tensors, model_at_omega, Loss};
use crate::tensor::{FactorMatrix, SparseTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianVariant {
    /// Drops the `phi'` terms of the off-diagonal blocks.
    GaussNewton,
    Newton,
}

/// Gradient blocks `mttkrp(phi', n) + 2 reg A_n`.
pub fn gradient(phi1: &SparseTensor, factors: &[&FactorMatrix], reg: f64) -> Result<Vec<FactorMatrix>> {
    (0..factors.len())
        .map(|n| {
            let mut g = mttkrp(phi1, factors, n)?;
            g.axpy(2.0 * reg, factors[n]);
            Ok(g)
        })
        .collect()
}

/// Implicit Hessian (or Gauss-Newton matrix) times `x`.
///
/// For each entry `e` let `c_p(e) = sum_r x_p[i_p, r] prod_{n != p} A_n[i_n, r]`.
/// Then
///
/// `y_d = mttkrp(phi'' * sum_p c_p, d) + sum_{p != d} mttkrp(phi', A with A_p := x_p, d) + 2 reg x_d`,
///
/// where the middle sum is only present for [`HessianVariant::Newton`].
pub fn hessian_matvec(
    phi1: &SparseTensor,
    phi2: &SparseTensor,
    factors: &[&FactorMatrix],
    x: &[FactorMatrix],
    variant: HessianVariant,
    reg: f64,
) -> Result<Vec<FactorMatrix>> {
    let order = factors.len();
    if x.len() != order || x.iter().zip(factors).any(|(x, f)| !x.same_shape(f)) {
        return Err(Error::dim("direction blocks do not match the factor shapes"));
    }
    phi1.require_same_pattern(phi2, "hessian matvec")?;
    let swapped = |p: usize| -> Vec<&FactorMatrix> {
        factors
            .iter()
            .enumerate()
            .map(|(n, &f)| if n == p { &x[p] } else { f })
            .collect()
    };
    let mut z = vec![0.0; phi2.nnz()];
    for p in 0..order {
        let f: Vec<Option<&FactorMatrix>> = swapped(p).into_iter().map(Some).collect();
        let c = tttp(phi2, &f, 1)?;
        z.iter_mut().zip(c.values()).for_each(|(z, c)| *z += c);
    }
    let z = phi2.with_values(z)?;
    (0..order)
        .map(|d| {
            let mut y = mttkrp(&z, factors, d)?;
            if variant == HessianVariant::Newton {
                for p in (0..order).filter(|&p| p != d) {
                    y.axpy(1.0, &mttkrp(phi1, &swapped(p), d)?);
                }
            }
            y.axpy(2.0 * reg, &x[d]);
            Ok(y)
        })
        .collect()
}

/// Concatenates blocks row-major, in mode order.
pub fn flatten(blocks: &[FactorMatrix]) -> Vec<f64> {
    blocks.iter().flat_map(|b| b.as_slice().iter().copied()).collect()
}

/// Splits `v` into blocks shaped like `like`.
pub fn unflatten(like: &[&FactorMatrix], v: &[f64]) -> Result<Vec<FactorMatrix>> {
    let total: usize = like.iter().map(|f| f.rows() * f.rank()).sum();
    if v.len() != total {
        return Err(Error::dim(format!("vector has {} values, blocks need {total}", v.len())));
    }
    let mut off = 0;
    like.iter()
        .map(|f| {
            let len = f.rows() * f.rank();
            let b = FactorMatrix::from_vec(f.rows(), f.rank(), v[off..off + len].to_vec());
            off += len;
            b
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
    /// Set when a search direction with `p^T A p <= 0` ended the solve.
    pub negative_curvature: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for `A x = rhs` from `x = 0`.
///
/// Stops when `||r|| / ||rhs|| < rel_tol`, after `max_iters` iterations, or
/// on a direction of non-positive curvature. In the last case the current
/// iterate is kept, unless it is still zero; then the preconditioned
/// residual `M^{-1} rhs` (a descent direction) is returned instead.
pub fn pcg_solve(
    mut matvec: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    mut precond: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    rhs: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> Result<PcgResult> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::param(format!("cg tolerance {rel_tol} must be in (0, 1)")));
    }
    let n = rhs.len();
    let b_norm = dot(rhs, rhs).sqrt();
    let mut out = PcgResult {
        x: vec![0.0; n],
        iterations: 0,
        rel_residual: 0.0,
        negative_curvature: false,
    };
    if !b_norm.is_finite() {
        return Err(Error::Numerical("non-finite right hand side in CG".into()));
    }
    if b_norm == 0.0 {
        return Ok(out);
    }
    out.rel_residual = 1.0;
    let mut r = rhs.to_vec();
    let mut z = precond(&r)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for k in 1..=max_iters {
        let ap = matvec(&p)?;
        let pap = dot(&p, &ap);
        if !pap.is_finite() || !rz.is_finite() {
            return Err(Error::Numerical(format!("non-finite values in CG iteration {k}")));
        }
        if pap <= 0.0 {
            out.negative_curvature = true;
            if k == 1 {
                out.x = p;
            }
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            out.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        out.iterations = k;
        out.rel_residual = dot(&r, &r).sqrt() / b_norm;
        if out.rel_residual < rel_tol {
            break;
        }
        z = precond(&r)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(out)
}

/// Factored diagonal Hessian blocks: per mode, `G(i)` weighted by `phi''`
/// plus `reg I`.
pub fn block_preconditioner(
    phi2: &SparseTensor,
    factors: &[&FactorMatrix],
    reg: f64,
    opts: SolveOptions,
) -> Result<Vec<FactoredBlocks>> {
    (0..factors.len())
        .map(|n| normal_blocks(phi2, factors, n, opts)?.factorize(reg, n))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnStats {
    pub cg_iterations: usize,
    pub rel_residual: f64,
    pub grad_norm: f64,
}

/// One (Gauss-)Newton step `A += -H^{-1} grad` with the Hessian applied
/// implicitly inside block-diagonally preconditioned CG.
pub fn gn_step(
    t: &SparseTensor,
    state: &mut CompletionState,
    loss: &dyn Loss,
    cfg: &SolverConfig,
    variant: HessianVariant,
) -> Result<GnStats> {
    let delta = {
        let f = state.refs();
        let m = model_at_omega(&omega(t), &f)?;
        let (d1, d2) = derivative_tensors(loss, t, &m)?;
        let grad = gradient(&d1, &f, cfg.reg)?;
        let rhs: Vec<f64> = flatten(&grad).into_iter().map(|g| -g).collect();
        let grad_norm = dot(&rhs, &rhs).sqrt();
        if grad_norm == 0.0 {
            return Ok(GnStats {
                cg_iterations: 0,
                rel_residual: 0.0,
                grad_norm,
            });
        }
        let pre = block_preconditioner(&d2, &f, 2.0 * cfg.reg, cfg.solve)?;
        let res = pcg_solve(
            |v| Ok(flatten(&hessian_matvec(&d1, &d2, &f, &unflatten(&f, v)?, variant, cfg.reg)?)),
            |v| {
                let blocks = unflatten(&f, v)?;
                let solved = pre
                    .iter()
                    .zip(&blocks)
                    .map(|(p, b)| p.solve(b))
                    .collect::<Result<Vec<_>>>()?;
                Ok(flatten(&solved))
            },
            &rhs,
            cfg.cg_tol,
            cfg.cg_max,
        )?;
        let stats = GnStats {
            cg_iterations: res.iterations,
            rel_residual: res.rel_residual,
            grad_norm,
        };
        (unflatten(&f, &res.x)?, stats)
    };
    for (a, d) in state.factors.iter_mut().zip(&delta.0) {
        a.axpy(1.0, d);
    }
    Ok(delta.1)
}
