//! Elementwise losses `phi(t, m)` on observed entries and the quantities
//! built from them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::{tttp, NormalBlocks};
use crate::tensor::{FactorMatrix, RngState, SparseTensor};

/// Progress metric reported next to the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Rmse,
    NormLoss,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::NormLoss => "norm_loss",
        }
    }
}

pub trait Loss: Send + Sync + fmt::Debug {
    fn id(&self) -> &str;
    fn phi(&self, t: f64, m: f64) -> f64;
    fn dphi(&self, t: f64, m: f64) -> f64;
    fn d2phi(&self, t: f64, m: f64) -> f64;

    fn in_domain(&self, m: f64) -> bool {
        m.is_finite()
    }

    /// Rejects data the loss is not defined for.
    fn validate_data(&self, t: &SparseTensor) -> Result<()> {
        match t.values().iter().position(|v| !v.is_finite()) {
            Some(e) => Err(Error::Data(format!(
                "non-finite value at {:?}",
                t.entry_coords(e)
            ))),
            None => Ok(()),
        }
    }

    fn metric(&self) -> Metric {
        Metric::NormLoss
    }

    /// Ranges of `(t, m)` used for the registry's derivative check.
    fn check_ranges(&self) -> ((f64, f64), (f64, f64)) {
        ((-3.0, 3.0), (-3.0, 3.0))
    }
}

/// `(t - m)^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeastSquares;

impl Loss for LeastSquares {
    fn id(&self) -> &str {
        "ls"
    }
    fn phi(&self, t: f64, m: f64) -> f64 {
        (t - m) * (t - m)
    }
    fn dphi(&self, t: f64, m: f64) -> f64 {
        2.0 * (m - t)
    }
    fn d2phi(&self, _t: f64, _m: f64) -> f64 {
        2.0
    }
    fn metric(&self) -> Metric {
        Metric::Rmse
    }
}

/// Model values above this are clamped before exponentiation.
pub const POISSON_CLAMP: f64 = 50.0;

/// Poisson loss with log link: `exp(m) - t m` for count data `t >= 0`.
#[derive(Debug, Default)]
pub struct PoissonLogLink {
    clamped: AtomicU64,
}

impl PoissonLogLink {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of evaluations that hit the clamp so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    fn exp(&self, m: f64) -> f64 {
        if m > POISSON_CLAMP {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            POISSON_CLAMP.exp()
        } else {
            m.exp()
        }
    }
}

impl Loss for PoissonLogLink {
    fn id(&self) -> &str {
        "poisson"
    }
    fn phi(&self, t: f64, m: f64) -> f64 {
        self.exp(m) - t * m
    }
    fn dphi(&self, t: f64, m: f64) -> f64 {
        self.exp(m) - t
    }
    fn d2phi(&self, _t: f64, m: f64) -> f64 {
        self.exp(m)
    }
    fn validate_data(&self, t: &SparseTensor) -> Result<()> {
        match t.values().iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            Some(e) => Err(Error::Data(format!(
                "poisson loss needs nonnegative counts, found {} at {:?}",
                t.values()[e],
                t.entry_coords(e)
            ))),
            None => Ok(()),
        }
    }
    fn check_ranges(&self) -> ((f64, f64), (f64, f64)) {
        ((0.0, 5.0), (-3.0, 3.0))
    }
}

/// Checks `dphi` and `d2phi` against centered differences at `samples`
/// random points; returns the worst relative error seen.
pub fn derivative_check(loss: &dyn Loss, samples: usize, rng: RngState) -> Result<f64> {
    let ((t0, t1), (m0, m1)) = loss.check_ranges();
    let mut g = rng.generator();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let t = g.gen_range(t0..=t1);
        let m = g.gen_range(m0..=m1);
        let fd1 = (loss.phi(t, m + h) - loss.phi(t, m - h)) / (2.0 * h);
        let fd2 = (loss.dphi(t, m + h) - loss.dphi(t, m - h)) / (2.0 * h);
        let e1 = (fd1 - loss.dphi(t, m)).abs() / loss.dphi(t, m).abs().max(1.0);
        let e2 = (fd2 - loss.d2phi(t, m)).abs() / loss.d2phi(t, m).abs().max(1.0);
        worst = worst.max(e1).max(e2);
        if !(e1.max(e2) < 1e-6) {
            return Err(Error::Numerical(format!(
                "loss {} fails the derivative check at t={t}, m={m} (errors {e1:.2e}, {e2:.2e})",
                loss.id()
            )));
        }
    }
    Ok(worst)
}

/// Losses keyed by identifier. Registration runs [`derivative_check`].
#[derive(Debug, Clone, Default)]
pub struct LossRegistry {
    losses: BTreeMap<String, Arc<dyn Loss>>,
}

impl LossRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.register(Arc::new(LeastSquares)).expect("built-in loss");
        r.register(Arc::new(PoissonLogLink::new())).expect("built-in loss");
        r
    }

    pub fn register(&mut self, loss: Arc<dyn Loss>) -> Result<()> {
        derivative_check(loss.as_ref(), 1000, RngState::new(0x1055))?;
        self.losses.insert(loss.id().to_string(), loss);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn Loss>> {
        self.losses.get(id).cloned().ok_or_else(|| {
            Error::param(format!(
                "unknown loss {id:?} (known: {})",
                self.ids().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.losses.keys().map(String::as_str)
    }
}

/// Model values `<a_1[i_1], ..., a_N[i_N]>` on the pattern of `omega`,
/// scaled by `omega`'s values (unit for an indicator tensor).
pub fn model_at_omega(omega: &SparseTensor, factors: &[&FactorMatrix]) -> Result<SparseTensor> {
    let f: Vec<_> = factors.iter().map(|&f| Some(f)).collect();
    tttp(omega, &f, 1)
}

/// Model values on the observed pattern of `t`.
pub fn model_on(t: &SparseTensor, factors: &[&FactorMatrix]) -> Result<SparseTensor> {
    model_at_omega(&t.with_values(vec![1.0; t.nnz()])?, factors)
}

/// `(dphi(t, m), d2phi(t, m))` on the shared pattern.
pub fn derivative_tensors(
    loss: &dyn Loss,
    t: &SparseTensor,
    m: &SparseTensor,
) -> Result<(SparseTensor, SparseTensor)> {
    t.require_same_pattern(m, "derivative tensors")?;
    let (d1, d2) = t
        .values()
        .iter()
        .zip(m.values())
        .map(|(&t, &m)| (loss.dphi(t, m), loss.d2phi(t, m)))
        .unzip();
    Ok((t.with_values(d1)?, t.with_values(d2)?))
}

/// `sum over observed entries of phi(t, m)`.
pub fn data_term(loss: &dyn Loss, t: &SparseTensor, m: &SparseTensor) -> Result<f64> {
    t.require_same_pattern(m, "loss evaluation")?;
    Ok(t.values()
        .iter()
        .zip(m.values())
        .map(|(&t, &m)| loss.phi(t, m))
        .sum())
}

pub fn reg_term(factors: &[&FactorMatrix], reg: f64) -> f64 {
    reg * factors.iter().map(|f| f.frob_norm_sq()).sum::<f64>()
}

/// `sum phi(t, m) + reg * sum_n ||A_n||_F^2`.
pub fn objective(loss: &dyn Loss, t: &SparseTensor, factors: &[&FactorMatrix], reg: f64) -> Result<f64> {
    loss.validate_data(t)?;
    let m = model_on(t, factors)?;
    Ok(data_term(loss, t, &m)? + reg_term(factors, reg))
}

/// Root mean squared error per observed entry.
pub fn rmse(t: &SparseTensor, factors: &[&FactorMatrix]) -> Result<f64> {
    if t.is_empty() {
        return Err(Error::Data("RMSE of an empty observed set".into()));
    }
    let m = model_on(t, factors)?;
    Ok((data_term(&LeastSquares, t, &m)? / t.nnz() as f64).sqrt())
}

/// `(1 / |Omega|) sum phi(t, m)`.
pub fn normalized_loss(loss: &dyn Loss, t: &SparseTensor, factors: &[&FactorMatrix]) -> Result<f64> {
    if t.is_empty() {
        return Err(Error::Data("normalized loss of an empty observed set".into()));
    }
    let m = model_on(t, factors)?;
    Ok(data_term(loss, t, &m)? / t.nnz() as f64)
}

/// Least-squares data term from the last ALS subiteration:
///
/// `||t||^2 + sum_i u_i^T G(i) u_i - 2 sum_i u_i^T p_i`,
///
/// where `G(i)` and `p_i` are the left and right hand sides used to solve
/// for `u`. Costs `O(I R^2)` instead of a pass over the nonzeros.
pub fn fast_ls_loss(
    t_norm_sq: f64,
    u_new: &FactorMatrix,
    g_blocks: &NormalBlocks,
    p_rhs: &FactorMatrix,
) -> Result<f64> {
    let rank = u_new.rank();
    if g_blocks.rank() != rank || g_blocks.rows() != u_new.rows() || !u_new.same_shape(p_rhs) {
        return Err(Error::dim(format!(
            "fast loss operands disagree: u {}x{}, G {}x{r}x{r}, p {}x{}",
            u_new.rows(),
            rank,
            g_blocks.rows(),
            p_rhs.rows(),
            p_rhs.rank(),
            r = g_blocks.rank()
        )));
    }
    let mut quad = 0.0;
    for i in 0..u_new.rows() {
        let u = u_new.row(i);
        let g = g_blocks.block(i);
        for r in 0..rank {
            let gu: f64 = g[r * rank..(r + 1) * rank].iter().zip(u).map(|(a, b)| a * b).sum();
            quad += u[r] * gu;
        }
    }
    Ok(t_norm_sq + quad - 2.0 * u_new.dot(p_rhs))
}
