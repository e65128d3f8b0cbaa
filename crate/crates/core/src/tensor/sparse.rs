use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::Shape;

/// Sorted nonzero pattern shared between tensors that live on the same
/// observed set (T, Omega, the derivative tensors, residuals).
///
/// Per-mode coordinates are decoded once at construction so kernels never
/// divide keys on their hot paths.
#[derive(Debug)]
pub struct Pattern {
    shape: Shape,
    keys: Vec<u64>,
    coords: Vec<Vec<usize>>,
}

impl Pattern {
    fn from_sorted_keys(shape: Shape, keys: Vec<u64>) -> Self {
        let order = shape.order();
        let mut coords: Vec<Vec<usize>> = (0..order).map(|_| Vec::with_capacity(keys.len())).collect();
        let mut buf = vec![0usize; order];
        for &k in &keys {
            shape.delinearize_into(k, &mut buf);
            for (col, &c) in coords.iter_mut().zip(&buf) {
                col.push(c);
            }
        }
        Self {
            shape,
            keys,
            coords,
        }
    }
}

/// Order-N coordinate-format sparse tensor with strictly increasing 64-bit
/// linearized keys. Explicit zeros are kept: a stored zero is an observed
/// zero.
#[derive(Debug, Clone)]
pub struct SparseTensor {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl PartialEq for SparseTensor {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape() && self.keys() == other.keys() && self.values == other.values
    }
}

impl SparseTensor {
    pub fn empty(shape: Shape) -> Self {
        Self {
            pattern: Arc::new(Pattern::from_sorted_keys(shape, Vec::new())),
            values: Vec::new(),
        }
    }

    /// Builds a tensor from unsorted `(coords, value)` entries. Duplicate
    /// coordinates are merged by summation.
    pub fn from_entries<C, I>(shape: Shape, entries: I) -> Result<Self>
    where
        C: AsRef<[usize]>,
        I: IntoIterator<Item = (C, f64)>,
    {
        let mut pairs = Vec::new();
        for (c, v) in entries {
            pairs.push((shape.linearize(c.as_ref())?, v));
        }
        Ok(Self::from_key_value_pairs(shape, pairs))
    }

    /// Builds a tensor from unsorted keys. Duplicates are summed in input order.
    pub fn from_keys(shape: Shape, keys: Vec<u64>, values: Vec<f64>) -> Result<Self> {
        if keys.len() != values.len() {
            return Err(Error::dim(format!(
                "{} keys but {} values",
                keys.len(),
                values.len()
            )));
        }
        if let Some(&k) = keys.iter().find(|&&k| k >= shape.total()) {
            return Err(Error::param(format!(
                "key {k} outside shape with {} cells",
                shape.total()
            )));
        }
        Ok(Self::from_key_value_pairs(
            shape,
            keys.into_iter().zip(values).collect(),
        ))
    }

    fn from_key_value_pairs(shape: Shape, mut pairs: Vec<(u64, f64)>) -> Self {
        // stable, so duplicates are summed in input order
        pairs.sort_by_key(|p| p.0);
        let mut keys: Vec<u64> = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (k, v) in pairs {
            if keys.last() == Some(&k) {
                *values.last_mut().unwrap() += v;
            } else {
                keys.push(k);
                values.push(v);
            }
        }
        Self {
            pattern: Arc::new(Pattern::from_sorted_keys(shape, keys)),
            values,
        }
    }

    /// Builds a tensor from keys that are already strictly increasing.
    pub fn from_sorted(shape: Shape, keys: Vec<u64>, values: Vec<f64>) -> Result<Self> {
        if keys.len() != values.len() {
            return Err(Error::dim(format!(
                "{} keys but {} values",
                keys.len(),
                values.len()
            )));
        }
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("keys are not strictly increasing"));
        }
        if let Some(&k) = keys.last() {
            if k >= shape.total() {
                return Err(Error::param(format!(
                    "key {k} outside shape with {} cells",
                    shape.total()
                )));
            }
        }
        Ok(Self {
            pattern: Arc::new(Pattern::from_sorted_keys(shape, keys)),
            values,
        })
    }

    #[inline]
    pub fn shape(&self) -> &Shape {
        &self.pattern.shape
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.pattern.shape.order()
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn keys(&self) -> &[u64] {
        &self.pattern.keys
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Mode-`mode` index of every stored entry, in key order.
    #[inline]
    pub fn coords(&self, mode: usize) -> &[usize] {
        &self.pattern.coords[mode]
    }

    pub fn entry_coords(&self, entry: usize) -> Vec<usize> {
        self.pattern.coords.iter().map(|c| c[entry]).collect()
    }

    /// Iterator over `(coords, value)` pairs in key order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        (0..self.nnz()).map(move |e| (self.entry_coords(e), self.values[e]))
    }

    /// A tensor on the same pattern with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.nnz() {
            return Err(Error::dim(format!(
                "pattern has {} entries, got {} values",
                self.nnz(),
                values.len()
            )));
        }
        Ok(Self {
            pattern: Arc::clone(&self.pattern),
            values,
        })
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            pattern: Arc::clone(&self.pattern),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// True when both tensors have the same shape and key set.
    pub fn same_pattern(&self, other: &SparseTensor) -> bool {
        Arc::ptr_eq(&self.pattern, &other.pattern)
            || (self.shape() == other.shape() && self.keys() == other.keys())
    }

    pub(crate) fn require_same_pattern(&self, other: &SparseTensor, what: &str) -> Result<()> {
        if self.same_pattern(other) {
            Ok(())
        } else {
            Err(Error::dim(format!("{what}: key sets differ")))
        }
    }

    /// Sum of squared values.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Keeps the entries whose position satisfies `keep`, preserving order.
    pub(crate) fn filter_entries(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let mut keys = Vec::new();
        let mut values = Vec::new();
        for e in 0..self.nnz() {
            if keep(e) {
                keys.push(self.pattern.keys[e]);
                values.push(self.values[e]);
            }
        }
        Self {
            pattern: Arc::new(Pattern::from_sorted_keys(self.shape().clone(), keys)),
            values,
        }
    }
}
