//! Synthetic data: exact low-rank tensors observed on a random mask,
//! Poisson counts from a log-link model, and uniformly random patterns.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::tensor::{FactorMatrix, RngState, Shape, SparseTensor};

/// Default cap on the number of cells enumerated when drawing a mask.
pub const DEFAULT_CELL_CAP: u64 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueLaw {
    /// Factor entries uniform in `[0, 1)`.
    Uniform01,
    /// Factor entries standard normal.
    Gaussian,
}

impl std::str::FromStr for ValueLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform01" => Ok(ValueLaw::Uniform01),
            "gaussian" | "normal" => Ok(ValueLaw::Gaussian),
            other => Err(Error::param(format!("unknown value law {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LowRankConfig {
    pub shape: Shape,
    pub rank: usize,
    pub observed_fraction: f64,
    pub law: ValueLaw,
    pub cell_cap: u64,
}

impl LowRankConfig {
    pub fn new(shape: Shape, rank: usize, observed_fraction: f64) -> Self {
        Self {
            shape,
            rank,
            observed_fraction,
            law: ValueLaw::Uniform01,
            cell_cap: DEFAULT_CELL_CAP,
        }
    }

    pub fn law(mut self, law: ValueLaw) -> Self {
        self.law = law;
        self
    }
}

/// Observed entries plus the factors that generated them.
#[derive(Debug, Clone)]
pub struct LowRank {
    pub tensor: SparseTensor,
    pub factors: Vec<FactorMatrix>,
}

pub fn gen_low_rank(cfg: &LowRankConfig, rng: RngState) -> Result<LowRank> {
    if cfg.rank == 0 {
        return Err(Error::param("rank must be positive"));
    }
    let mut g = rng.split(0).generator();
    let factors: Vec<FactorMatrix> = cfg
        .shape
        .dims()
        .iter()
        .map(|&d| match cfg.law {
            ValueLaw::Uniform01 => FactorMatrix::random_uniform(d, cfg.rank, 1.0, &mut g),
            ValueLaw::Gaussian => FactorMatrix::random_normal(d, cfg.rank, 1.0, &mut g),
        })
        .collect();
    let tensor = observe_factors(
        &cfg.shape,
        &factors,
        cfg.observed_fraction,
        cfg.cell_cap,
        rng.split(1),
    )?;
    Ok(LowRank { tensor, factors })
}

/// Draws a Bernoulli(`fraction`) mask over every cell and stores the exact
/// multilinear inner product of the given factors at each observed cell.
pub fn observe_factors(
    shape: &Shape,
    factors: &[FactorMatrix],
    fraction: f64,
    cell_cap: u64,
    rng: RngState,
) -> Result<SparseTensor> {
    let keys = bernoulli_mask(shape, fraction, cell_cap, rng)?;
    check_factors(shape, factors)?;
    let mut coords = vec![0usize; shape.order()];
    let values = keys
        .iter()
        .map(|&k| {
            shape.delinearize_into(k, &mut coords);
            model_value(factors, &coords)
        })
        .collect();
    SparseTensor::from_sorted(shape.clone(), keys, values)
}

fn bernoulli_mask(shape: &Shape, fraction: f64, cell_cap: u64, rng: RngState) -> Result<Vec<u64>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(format!(
            "observed fraction {fraction} outside (0, 1]"
        )));
    }
    if shape.total() > cell_cap {
        return Err(Error::SizeCap(
            format!("mask over {} cells", shape.total()),
            cell_cap,
        ));
    }
    let mut g = rng.generator();
    Ok((0..shape.total())
        .filter(|_| fraction == 1.0 || g.gen::<f64>() < fraction)
        .collect())
}

fn check_factors(shape: &Shape, factors: &[FactorMatrix]) -> Result<()> {
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
    Ok(())
}

/// `sum_r prod_n factors[n][coords[n], r]`, evaluated directly.
pub fn model_value(factors: &[FactorMatrix], coords: &[usize]) -> f64 {
    let rank = factors[0].rank();
    (0..rank)
        .map(|r| {
            factors
                .iter()
                .zip(coords)
                .map(|(f, &i)| f.get(i, r))
                .product::<f64>()
        })
        .sum()
}

/// Count tensor drawn as `Poisson(exp(m))` on a Bernoulli mask, where `m` is
/// a random rank-`rank` log-link model with standard deviation about
/// `log_scale` per cell.
pub fn gen_poisson_counts(
    shape: &Shape,
    rank: usize,
    fraction: f64,
    log_scale: f64,
    rng: RngState,
) -> Result<LowRank> {
    if rank == 0 {
        return Err(Error::param("rank must be positive"));
    }
    // Var(m) = rank * sigma^(2N) for iid N(0, sigma^2) factor entries
    let order = shape.order() as f64;
    let sigma = (log_scale * log_scale / rank as f64).powf(1.0 / (2.0 * order));
    let mut g = rng.split(0).generator();
    let factors: Vec<FactorMatrix> = shape
        .dims()
        .iter()
        .map(|&d| FactorMatrix::random_normal(d, rank, sigma, &mut g))
        .collect();
    let keys = bernoulli_mask(shape, fraction, DEFAULT_CELL_CAP, rng.split(1))?;
    let mut g = rng.split(2).generator();
    let mut coords = vec![0usize; shape.order()];
    let mut values = Vec::with_capacity(keys.len());
    for &k in &keys {
        shape.delinearize_into(k, &mut coords);
        let rate = model_value(&factors, &coords).exp();
        let draw = Poisson::new(rate)
            .map_err(|e| Error::Numerical(format!("poisson rate {rate}: {e}")))?
            .sample(&mut g);
        values.push(draw);
    }
    let tensor = SparseTensor::from_sorted(shape.clone(), keys, values)?;
    Ok(LowRank { tensor, factors })
}

/// Smooth sampled function `1 / (1 + sum_n x_n)` with `x_n = i_n / I_n`,
/// observed on a Bernoulli mask. Numerically low rank; no exact factors.
pub fn gen_function_tensor(shape: &Shape, fraction: f64, rng: RngState) -> Result<SparseTensor> {
    let keys = bernoulli_mask(shape, fraction, DEFAULT_CELL_CAP, rng)?;
    let mut coords = vec![0usize; shape.order()];
    let values = keys
        .iter()
        .map(|&k| {
            shape.delinearize_into(k, &mut coords);
            let s: f64 = coords
                .iter()
                .zip(shape.dims())
                .map(|(&i, &d)| i as f64 / d as f64)
                .sum();
            1.0 / (1.0 + s)
        })
        .collect();
    SparseTensor::from_sorted(shape.clone(), keys, values)
}

/// Exactly `nnz` distinct uniformly random positions with values uniform in
/// `[-1, 1)`.
pub fn random_sparse(shape: &Shape, nnz: usize, rng: RngState) -> Result<SparseTensor> {
    if nnz as u64 > shape.total() {
        return Err(Error::param(format!(
            "{nnz} nonzeros requested for {} cells",
            shape.total()
        )));
    }
    let mut g = rng.generator();
    let keys: Vec<u64> = if (nnz as u64) * 2 > shape.total() {
        let mut all: Vec<u64> = (0..shape.total()).collect();
        for i in 0..nnz {
            let j = g.gen_range(i..all.len());
            all.swap(i, j);
        }
        all.truncate(nnz);
        all.sort_unstable();
        all
    } else {
        let mut seen = HashSet::with_capacity(nnz);
        let mut keys = Vec::with_capacity(nnz);
        while keys.len() < nnz {
            let k = g.gen_range(0..shape.total());
            if seen.insert(k) {
                keys.push(k);
            }
        }
        keys.sort_unstable();
        keys
    };
    let values = (0..nnz).map(|_| g.gen_range(-1.0..1.0)).collect();
    SparseTensor::from_sorted(shape.clone(), keys, values)
}
