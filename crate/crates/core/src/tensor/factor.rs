use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Dense `rows x rank` factor matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    rank: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, rank: usize) -> Self {
        Self {
            rows,
            rank,
            data: vec![0.0; rows * rank],
        }
    }

    pub fn from_vec(rows: usize, rank: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || rank == 0 {
            return Err(Error::param("factor matrices need at least one row and column"));
        }
        if data.len() != rows * rank {
            return Err(Error::dim(format!(
                "{rows}x{rank} factor needs {} values, got {}",
                rows * rank,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("factor matrix has non-finite entries".into()));
        }
        Ok(Self { rows, rank, data })
    }

    pub fn from_fn(rows: usize, rank: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * rank);
        for i in 0..rows {
            for r in 0..rank {
                data.push(f(i, r));
            }
        }
        Self { rows, rank, data }
    }

    /// Entries uniform in `[0, scale)`.
    pub fn random_uniform<R: Rng + ?Sized>(rows: usize, rank: usize, scale: f64, rng: &mut R) -> Self {
        Self::from_fn(rows, rank, |_, _| rng.gen::<f64>() * scale)
    }

    /// Entries normal with mean 0 and standard deviation `scale`.
    pub fn random_normal<R: Rng + ?Sized>(rows: usize, rank: usize, scale: f64, rng: &mut R) -> Self {
        Self::from_fn(rows, rank, |_, _| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.rank..(i + 1) * self.rank]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.rank..(i + 1) * self.rank]
    }

    #[inline]
    pub fn get(&self, i: usize, r: usize) -> f64 {
        self.data[i * self.rank + r]
    }

    #[inline]
    pub fn set(&mut self, i: usize, r: usize, v: f64) {
        self.data[i * self.rank + r] = v;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, r: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, r)).collect()
    }

    pub fn set_column(&mut self, r: usize, col: &[f64]) {
        for (i, &v) in col.iter().enumerate() {
            self.set(i, r, v);
        }
    }

    /// Column `r` as a `rows x 1` matrix.
    pub fn column_matrix(&self, r: usize) -> Self {
        Self {
            rows: self.rows,
            rank: 1,
            data: self.column(r),
        }
    }

    /// Columns `[start, end)` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Self {
        let w = end - start;
        let mut data = Vec::with_capacity(self.rows * w);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[start..end]);
        }
        Self {
            rows: self.rows,
            rank: w,
            data,
        }
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &FactorMatrix) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            rank: self.rank,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn dot(&self, other: &FactorMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &FactorMatrix) -> bool {
        self.rows == other.rows && self.rank == other.rank
    }
}

/// Borrow a list of factors as the reference slice the kernels take.
pub fn refs(factors: &[FactorMatrix]) -> Vec<&FactorMatrix> {
    factors.iter().collect()
}
