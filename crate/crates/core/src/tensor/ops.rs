use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{RngState, SparseTensor};

/// Entries of a tensor grouped by their index along one mode.
///
/// `perm[offsets[i]..offsets[i + 1]]` lists the entry positions whose
/// mode index is `i`, in their original (key) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeGrouping {
    pub mode: usize,
    pub perm: Vec<usize>,
    pub offsets: Vec<usize>,
}

impl ModeGrouping {
    pub fn group(&self, index: usize) -> &[usize] {
        &self.perm[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn num_groups(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// Stable counting sort of entry positions by mode index, O(m + I).
pub fn counting_sort_by_mode(t: &SparseTensor, mode: usize) -> Result<ModeGrouping> {
    if mode >= t.order() {
        return Err(Error::param(format!(
            "mode {mode} out of range for order {}",
            t.order()
        )));
    }
    let dim = t.shape().dim(mode);
    let idx = t.coords(mode);
    let mut offsets = vec![0usize; dim + 1];
    for &i in idx {
        offsets[i + 1] += 1;
    }
    for i in 0..dim {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets[..dim].to_vec();
    let mut perm = vec![0usize; idx.len()];
    for (e, &i) in idx.iter().enumerate() {
        perm[cursor[i]] = e;
        cursor[i] += 1;
    }
    Ok(ModeGrouping {
        mode,
        perm,
        offsets,
    })
}

/// Keeps each entry independently with probability `rate`.
pub fn sample(t: &SparseTensor, rate: f64, rng: RngState) -> Result<SparseTensor> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::param(format!("sample rate {rate} outside (0, 1]")));
    }
    if rate == 1.0 {
        return Ok(t.clone());
    }
    let mut g = rng.generator();
    Ok(t.filter_entries(|_| g.gen::<f64>() < rate))
}

/// Same pattern as `t` with every value set to 1.
pub fn omega_of(t: &SparseTensor) -> SparseTensor {
    t.map_values(|_| 1.0)
}
