use crate::error::{Error, Result};

/// Dimensions of an order-N tensor.
///
/// Linearized keys are row-major: the last mode varies fastest, so
/// `key = ((i0 * I1 + i1) * I2 + i2) ...`. The product of all dims must fit
/// in a `u64`, which lets every cell be addressed by a single 64-bit key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
    strides: Vec<u64>,
    total: u64,
}

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::Shape("order must be at least 1".into()));
        }
        if let Some(n) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Shape(format!("mode {n} has zero extent")));
        }
        let mut strides = vec![1u64; dims.len()];
        let mut total: u64 = 1;
        for n in (0..dims.len()).rev() {
            strides[n] = total;
            total = total.checked_mul(dims[n] as u64).ok_or_else(|| {
                Error::Shape(format!("product of dims {dims:?} overflows 64-bit keys"))
            })?;
        }
        Ok(Self {
            dims,
            strides,
            total,
        })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn dim(&self, mode: usize) -> usize {
        self.dims[mode]
    }

    /// Number of cells, i.e. the product of dims.
    #[inline]
    pub fn total(&self) -> u64 {
        self.total
    }

    #[inline]
    pub fn strides(&self) -> &[u64] {
        &self.strides
    }

    pub fn linearize(&self, coords: &[usize]) -> Result<u64> {
        if coords.len() != self.order() {
            return Err(Error::dim(format!(
                "expected {} coordinates, got {}",
                self.order(),
                coords.len()
            )));
        }
        let mut key = 0u64;
        for (mode, (&c, &d)) in coords.iter().zip(&self.dims).enumerate() {
            if c >= d {
                return Err(Error::Bounds {
                    mode,
                    coord: c,
                    dim: d,
                });
            }
            key = key * d as u64 + c as u64;
        }
        Ok(key)
    }

    /// Inverse of [`Shape::linearize`]; `key` must be below [`Shape::total`].
    pub fn delinearize_into(&self, mut key: u64, coords: &mut [usize]) {
        debug_assert!(key < self.total);
        for n in (0..self.order()).rev() {
            let d = self.dims[n] as u64;
            coords[n] = (key % d) as usize;
            key /= d;
        }
    }

    pub fn delinearize(&self, key: u64) -> Vec<usize> {
        let mut c = vec![0; self.order()];
        self.delinearize_into(key, &mut c);
        c
    }

    /// Shape over a subset of modes, in the given order.
    pub fn select(&self, modes: &[usize]) -> Result<Shape> {
        let dims = modes
            .iter()
            .map(|&m| {
                self.dims
                    .get(m)
                    .copied()
                    .ok_or_else(|| Error::param(format!("mode {m} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Shape::new(dims)
    }
}
