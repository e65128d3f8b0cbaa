//! Completion algorithms and run orchestration.
//!
//! All optimizers use the same derivative conventions: the gradient block
//! for factor `n` is `mttkrp(phi', n) + 2 reg A_n`, and Hessian blocks carry
//! `+ 2 reg I`. The least-squares ALS path solves the equivalent cancelled
//! system `(G(i) + reg I) u_i = mttkrp(T)_i` directly.

mod als;
mod ccd;
mod config;
mod newton;
mod sgd;
mod trace;

use std::time::Instant;

use rand_distr::{Distribution, Normal, Uniform};

pub use als::{als_sweep, als_update_mode, AlsSolve};
pub use ccd::ccd_sweep;
pub use config::{Algorithm, Init, SolverConfig};
pub use newton::{
    block_preconditioner, flatten, gn_step, gradient, hessian_matvec, pcg_solve, unflatten,
    GnStats, HessianVariant, PcgResult,
};
pub use sgd::sgd_sweep;
pub use trace::{RunTrace, TraceRecord};

use crate::error::{Error, Result};
use crate::loss::{self, Loss, LossRegistry};
use crate::tensor::{FactorMatrix, RngState, Shape, SparseTensor, RNG_ALGORITHM};

const INIT_STREAM: u64 = 1;
const SGD_STREAM: u64 = 2;

/// Factors and bookkeeping carried between sweeps.
#[derive(Debug, Clone)]
pub struct CompletionState {
    pub factors: Vec<FactorMatrix>,
    pub iteration: usize,
    /// Left and right hand sides of the latest least-squares ALS solve.
    pub last_solve: Option<AlsSolve>,
    rng: RngState,
}

impl CompletionState {
    /// Random initial factors for `shape` per `cfg.init`, one RNG stream per mode.
    pub fn init(shape: &Shape, cfg: &SolverConfig) -> Self {
        let root = RngState::new(cfg.seed);
        let scale = 1.0 / (cfg.rank as f64).sqrt();
        let factors = (0..shape.order())
            .map(|n| {
                let mut g = root.split(INIT_STREAM).split(n as u64).generator();
                let rows = shape.dim(n);
                let data: Vec<f64> = match cfg.init {
                    Init::Uniform => Uniform::new_inclusive(0.0, scale)
                        .sample_iter(&mut g)
                        .take(rows * cfg.rank)
                        .collect(),
                    Init::Gaussian => Normal::new(0.0, scale)
                        .expect("positive scale")
                        .sample_iter(&mut g)
                        .take(rows * cfg.rank)
                        .collect(),
                };
                FactorMatrix::from_vec(rows, cfg.rank, data).expect("finite init")
            })
            .collect();
        Self::with_rng(factors, root)
    }

    pub fn from_factors(shape: &Shape, factors: Vec<FactorMatrix>, seed: u64) -> Result<Self> {
        if factors.len() != shape.order() {
            return Err(Error::dim(format!(
                "{} factors for an order-{} tensor",
                factors.len(),
                shape.order()
            )));
        }
        let rank = factors[0].rank();
        for (n, f) in factors.iter().enumerate() {
            if f.rows() != shape.dim(n) || f.rank() != rank {
                return Err(Error::dim(format!(
                    "factor {n} is {}x{}, expected {}x{rank}",
                    f.rows(),
                    f.rank(),
                    shape.dim(n)
                )));
            }
        }
        Ok(Self::with_rng(factors, RngState::new(seed)))
    }

    fn with_rng(factors: Vec<FactorMatrix>, rng: RngState) -> Self {
        Self {
            factors,
            iteration: 0,
            last_solve: None,
            rng,
        }
    }

    pub fn refs(&self) -> Vec<&FactorMatrix> {
        self.factors.iter().collect()
    }

    pub fn rank(&self) -> usize {
        self.factors[0].rank()
    }

    /// RNG stream for the current iteration's sample.
    pub(crate) fn sample_rng(&self) -> RngState {
        self.rng.split(SGD_STREAM).split(self.iteration as u64)
    }

    pub(crate) fn check_against(&self, t: &SparseTensor) -> Result<()> {
        if self.factors.len() != t.order() {
            return Err(Error::dim("state order differs from the tensor order"));
        }
        for (n, f) in self.factors.iter().enumerate() {
            if f.rows() != t.shape().dim(n) || f.rank() != self.rank() {
                return Err(Error::dim(format!("factor {n} does not fit the tensor")));
            }
        }
        Ok(())
    }
}

/// Unit-valued tensor on the pattern of `t`.
pub(crate) fn omega(t: &SparseTensor) -> SparseTensor {
    t.with_values(vec![1.0; t.nnz()]).expect("same length")
}

/// Performs one outer iteration of the configured algorithm.
pub fn step(
    t: &SparseTensor,
    state: &mut CompletionState,
    loss: &dyn Loss,
    cfg: &SolverConfig,
) -> Result<()> {
    match cfg.algorithm {
        Algorithm::Als => als_sweep(t, state, loss, cfg),
        Algorithm::Ccd => ccd_sweep(t, state, cfg, loss),
        Algorithm::Sgd => sgd_sweep(t, state, cfg, loss),
        Algorithm::GaussNewton => gn_step(t, state, loss, cfg, HessianVariant::GaussNewton).map(|_| ()),
        Algorithm::Newton => gn_step(t, state, loss, cfg, HessianVariant::Newton).map(|_| ()),
    }?;
    state.iteration += 1;
    Ok(())
}

/// Runs `cfg` from a fresh random state. The loss is resolved from the
/// built-in registry.
pub fn run(t: &SparseTensor, cfg: &SolverConfig) -> Result<RunTrace> {
    let loss = LossRegistry::with_builtins().get(&cfg.loss)?;
    let mut state = CompletionState::init(t.shape(), cfg);
    run_from(t, cfg, loss.as_ref(), &mut state)
}

/// Runs `cfg` starting from `state`, which holds the final factors on return.
pub fn run_from(
    t: &SparseTensor,
    cfg: &SolverConfig,
    loss: &dyn Loss,
    state: &mut CompletionState,
) -> Result<RunTrace> {
    cfg.validate()?;
    loss.validate_data(t)?;
    state.check_against(t)?;
    if t.is_empty() {
        return Err(Error::Data("no observed entries".into()));
    }
    let start = Instant::now();
    let mut trace = RunTrace::new(loss.metric(), metadata(t, cfg, loss));
    let evaluate = |state: &CompletionState| -> Result<(f64, f64)> {
        let f = state.refs();
        let m = loss::model_on(t, &f)?;
        let data = loss::data_term(loss, t, &m)?;
        let objective = data + loss::reg_term(&f, cfg.reg);
        let metric = match loss.metric() {
            loss::Metric::Rmse => (data / t.nnz() as f64).sqrt(),
            loss::Metric::NormLoss => data / t.nnz() as f64,
        };
        Ok((objective, metric))
    };
    let elapsed = |cfg: &SolverConfig| {
        if cfg.deterministic {
            0.0
        } else {
            start.elapsed().as_secs_f64()
        }
    };

    let (f0, m0) = evaluate(state)?;
    trace.push(state.iteration, elapsed(cfg), f0, m0);
    let mut prev = f0;
    for it in 1..=cfg.max_iters {
        step(t, state, loss, cfg)?;
        if it % cfg.record_every != 0 {
            continue;
        }
        let (f, m) = evaluate(state)?;
        if !f.is_finite() || (cfg.algorithm == Algorithm::Sgd && f > 1e3 * f0) {
            return Err(Error::Numerical(format!(
                "{} diverged at iteration {it}: objective {f:.3e} from initial {f0:.3e}",
                cfg.algorithm
            )));
        }
        trace.push(state.iteration, elapsed(cfg), f, m);
        if (prev - f).abs() <= cfg.tol * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        prev = f;
    }
    Ok(trace)
}

fn metadata(t: &SparseTensor, cfg: &SolverConfig, loss: &dyn Loss) -> Vec<(String, String)> {
    let dims: Vec<String> = t.shape().dims().iter().map(|d| d.to_string()).collect();
    let mut meta = vec![
        ("algo", cfg.algorithm.to_string()),
        ("loss", loss.id().to_string()),
        ("rank", cfg.rank.to_string()),
        ("reg", format!("{:e}", cfg.reg)),
        ("max_iters", cfg.max_iters.to_string()),
        ("tol", format!("{:e}", cfg.tol)),
    ];
    match cfg.algorithm {
        Algorithm::Als | Algorithm::Ccd => {
            meta.push(("inner_max", cfg.inner_max.to_string()));
            meta.push(("inner_tol", format!("{:e}", cfg.inner_tol)));
        }
        Algorithm::Sgd => {
            meta.push(("step", format!("{:e}", cfg.step)));
            meta.push(("sample_rate", format!("{:e}", cfg.sample_rate)));
        }
        Algorithm::GaussNewton | Algorithm::Newton => {
            meta.push(("cg_tol", format!("{:e}", cfg.cg_tol)));
            meta.push(("cg_max", cfg.cg_max.to_string()));
        }
    }
    meta.extend([
        ("seed", cfg.seed.to_string()),
        ("rng", RNG_ALGORITHM.to_string()),
        ("deterministic", cfg.deterministic.to_string()),
        ("dims", dims.join(",")),
        ("nnz", t.nnz().to_string()),
        ("data_sha256", crate::io::fingerprint(t)),
    ]);
    if !cfg.deterministic {
        meta.push(("threads", rayon::current_num_threads().to_string()));
    }
    meta.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
