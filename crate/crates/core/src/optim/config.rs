use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::SolveOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Als,
    Ccd,
    Sgd,
    GaussNewton,
    Newton,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Als,
        Algorithm::Ccd,
        Algorithm::Sgd,
        Algorithm::GaussNewton,
        Algorithm::Newton,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Als => "als",
            Algorithm::Ccd => "ccd",
            Algorithm::Sgd => "sgd",
            Algorithm::GaussNewton => "gn",
            Algorithm::Newton => "newton",
        }
    }

    pub fn uses_cg(self) -> bool {
        matches!(self, Algorithm::GaussNewton | Algorithm::Newton)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::param(format!("unknown algorithm {s:?}")))
    }
}

/// Distribution of the initial factor entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Uniform on `[0, 1/sqrt(R)]`.
    #[default]
    Uniform,
    /// Normal with standard deviation `1/sqrt(R)`.
    Gaussian,
}

impl FromStr for Init {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Init::Uniform),
            "gaussian" => Ok(Init::Gaussian),
            _ => Err(Error::param(format!("unknown init {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rank: usize,
    pub reg: f64,
    pub loss: String,
    pub algorithm: Algorithm,
    pub max_iters: usize,
    /// Stop when the relative objective change between records falls below.
    pub tol: f64,
    pub inner_max: usize,
    pub inner_tol: f64,
    pub cg_tol: f64,
    pub cg_max: usize,
    pub step: f64,
    pub sample_rate: f64,
    pub deterministic: bool,
    pub seed: u64,
    pub init: Init,
    /// Run the Newton inner loop of ALS even for least squares.
    pub generalized_als: bool,
    /// Keep `phi''` fixed across the inner Newton steps of one ALS mode update.
    pub frozen_hessian: bool,
    /// SGD records the trace every this many iterations.
    pub record_every: usize,
    pub solve: SolveOptions,
}

impl SolverConfig {
    /// Defaults for a loss and algorithm pair.
    pub fn new(algorithm: Algorithm, loss: &str, rank: usize) -> Self {
        let poisson = loss == "poisson";
        let reg = match (poisson, algorithm) {
            (false, Algorithm::Als | Algorithm::Ccd) => 1e-5,
            (false, Algorithm::Sgd) => 1e-7,
            (false, _) => 1e-3,
            (true, Algorithm::Ccd) => 1.0,
            (true, _) => 0.1,
        };
        let step = if poisson { 3e-3 } else { 5e-3 };
        Self {
            rank,
            reg,
            loss: loss.to_string(),
            algorithm,
            max_iters: if algorithm == Algorithm::Sgd { 200 } else { 20 },
            tol: 1e-6,
            inner_max: 5,
            inner_tol: 1e-3,
            cg_tol: 5e-3,
            cg_max: 30.min(3 * rank).max(1),
            step,
            sample_rate: step,
            deterministic: false,
            seed: 0,
            init: Init::Uniform,
            generalized_als: false,
            frozen_hessian: false,
            record_every: if algorithm == Algorithm::Sgd { 20 } else { 1 },
            solve: SolveOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol", self.tol),
            ("inner tolerance", self.inner_tol),
            ("cg tolerance", self.cg_tol),
            ("step", self.step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.reg >= 0.0 && self.reg.is_finite()) {
            return Err(Error::param(format!("reg must be >= 0, got {}", self.reg)));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            return Err(Error::param(format!(
                "sample rate must be in (0, 1], got {}",
                self.sample_rate
            )));
        }
        if self.cg_tol >= 1.0 {
            return Err(Error::param("cg tolerance must be below 1"));
        }
        if self.rank == 0 || self.inner_max == 0 || self.cg_max == 0 || self.record_every == 0 {
            return Err(Error::param(
                "rank, inner max, cg max and record interval must be positive",
            ));
        }
        Ok(())
    }
}
