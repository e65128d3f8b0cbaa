use crate::error::{Error, Result};
use crate::tensor::SparseTensor;

/// Doubly-compressed sparse row matrix.
///
/// CSR is stored over the nonzero rows only; `nnz_row_ids` maps each
/// compressed row slot back to its global row index. No array scales with
/// `global_rows`, so storage is linear in the number of stored entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CcsrMatrix {
    global_rows: u64,
    global_cols: u64,
    nnz_row_ids: Vec<u64>,
    row_offsets: Vec<usize>,
    col_ids: Vec<u64>,
    values: Vec<f64>,
}

impl CcsrMatrix {
    pub fn empty(global_rows: u64, global_cols: u64) -> Self {
        Self {
            global_rows,
            global_cols,
            nnz_row_ids: Vec::new(),
            row_offsets: vec![0],
            col_ids: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from unsorted `(row, col, value)` triplets; duplicates are summed
    /// in input order.
    pub fn from_triplets(
        global_rows: u64,
        global_cols: u64,
        mut triplets: Vec<(u64, u64, f64)>,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets
            .iter()
            .find(|&&(r, c, _)| r >= global_rows || c >= global_cols)
        {
            return Err(Error::dim(format!(
                "entry ({r}, {c}) outside {global_rows}x{global_cols}"
            )));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut out = Self::empty(global_rows, global_cols);
        for (r, c, v) in triplets {
            if out.nnz_row_ids.last() != Some(&r) {
                out.nnz_row_ids.push(r);
                out.row_offsets.push(out.col_ids.len());
            } else if out.col_ids.last() == Some(&c) {
                *out.values.last_mut().unwrap() += v;
                continue;
            }
            out.col_ids.push(c);
            out.values.push(v);
            *out.row_offsets.last_mut().unwrap() = out.col_ids.len();
        }
        Ok(out)
    }

    /// Builds from raw arrays, checking every structural invariant.
    pub fn from_parts(
        global_rows: u64,
        global_cols: u64,
        nnz_row_ids: Vec<u64>,
        row_offsets: Vec<usize>,
        col_ids: Vec<u64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let m = Self {
            global_rows,
            global_cols,
            nnz_row_ids,
            row_offsets,
            col_ids,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::dim(format!("invalid CCSR: {msg}")));
        if self.row_offsets.len() != self.nnz_row_ids.len() + 1 || self.row_offsets[0] != 0 {
            return bad("row_offsets length");
        }
        if self.row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return bad("row_offsets decreasing");
        }
        if *self.row_offsets.last().unwrap() != self.col_ids.len()
            || self.col_ids.len() != self.values.len()
        {
            return bad("entry count");
        }
        if self.nnz_row_ids.windows(2).any(|w| w[0] >= w[1])
            || self.nnz_row_ids.last().is_some_and(|&r| r >= self.global_rows)
        {
            return bad("nonzero row ids");
        }
        for slot in 0..self.num_nonzero_rows() {
            let (cols, _) = self.row(slot);
            if cols.windows(2).any(|w| w[0] >= w[1])
                || cols.last().is_some_and(|&c| c >= self.global_cols)
            {
                return bad("column ids");
            }
        }
        Ok(())
    }

    pub fn global_rows(&self) -> u64 {
        self.global_rows
    }

    pub fn global_cols(&self) -> u64 {
        self.global_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn num_nonzero_rows(&self) -> usize {
        self.nnz_row_ids.len()
    }

    pub fn nnz_row_ids(&self) -> &[u64] {
        &self.nnz_row_ids
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_ids(&self) -> &[u64] {
        &self.col_ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Columns and values of compressed row `slot`.
    pub fn row(&self, slot: usize) -> (&[u64], &[f64]) {
        let r = self.row_offsets[slot]..self.row_offsets[slot + 1];
        (&self.col_ids[r.clone()], &self.values[r])
    }

    /// Bytes occupied by the four index/value arrays.
    pub fn storage_bytes(&self) -> usize {
        use std::mem::size_of;
        self.nnz_row_ids.len() * size_of::<u64>()
            + self.row_offsets.len() * size_of::<usize>()
            + self.col_ids.len() * size_of::<u64>()
            + self.values.len() * size_of::<f64>()
    }

    /// All stored entries as `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> Vec<(u64, u64, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for (slot, &r) in self.nnz_row_ids.iter().enumerate() {
            let (cols, vals) = self.row(slot);
            out.extend(cols.iter().zip(vals).map(|(&c, &v)| (r, c, v)));
        }
        out
    }

    /// Rows `[start, end)` as a matrix with the same global shape.
    pub fn row_range(&self, start: u64, end: u64) -> Self {
        let lo = self.nnz_row_ids.partition_point(|&r| r < start);
        let hi = self.nnz_row_ids.partition_point(|&r| r < end);
        let base = self.row_offsets[lo];
        let top = self.row_offsets[hi];
        Self {
            global_rows: self.global_rows,
            global_cols: self.global_cols,
            nnz_row_ids: self.nnz_row_ids[lo..hi].to_vec(),
            row_offsets: self.row_offsets[lo..=hi].iter().map(|o| o - base).collect(),
            col_ids: self.col_ids[base..top].to_vec(),
            values: self.values[base..top].to_vec(),
        }
    }

    /// Concatenates matrices whose nonzero rows are in increasing,
    /// non-overlapping ranges.
    pub fn concat_rows(parts: &[CcsrMatrix]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::param("nothing to concatenate"))?;
        let mut out = Self::empty(first.global_rows, first.global_cols);
        for p in parts {
            if p.global_rows != out.global_rows || p.global_cols != out.global_cols {
                return Err(Error::dim("concatenated shards differ in global shape"));
            }
            if let (Some(&last), Some(&next)) = (out.nnz_row_ids.last(), p.nnz_row_ids.first()) {
                if next <= last {
                    return Err(Error::param("shard row ranges overlap or are out of order"));
                }
            }
            let base = out.col_ids.len();
            out.nnz_row_ids.extend_from_slice(&p.nnz_row_ids);
            out.row_offsets
                .extend(p.row_offsets[1..].iter().map(|o| o + base));
            out.col_ids.extend_from_slice(&p.col_ids);
            out.values.extend_from_slice(&p.values);
        }
        Ok(out)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }
}

/// Matricizes `t`: entry coordinates map to (row key over `row_modes`,
/// column key over `col_modes`), each linearized row-major in the order
/// given.
pub fn matricize_to_ccsr(
    t: &SparseTensor,
    row_modes: &[usize],
    col_modes: &[usize],
) -> Result<CcsrMatrix> {
    let order = t.order();
    let mut seen = vec![false; order];
    for &m in row_modes.iter().chain(col_modes) {
        if m >= order || std::mem::replace(&mut seen[m], true) {
            return Err(Error::param(format!(
                "row modes {row_modes:?} and col modes {col_modes:?} must partition 0..{order}"
            )));
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(Error::param(format!(
            "row modes {row_modes:?} and col modes {col_modes:?} must partition 0..{order}"
        )));
    }
    let merged = |modes: &[usize]| -> Result<u64> {
        modes.iter().try_fold(1u64, |acc, &m| {
            acc.checked_mul(t.shape().dim(m) as u64)
                .ok_or_else(|| Error::Shape(format!("merged modes {modes:?} overflow 64 bits")))
        })
    };
    let rows = merged(row_modes)?;
    let cols = merged(col_modes)?;
    let key = |modes: &[usize], e: usize| -> u64 {
        modes.iter().fold(0u64, |acc, &m| {
            acc * t.shape().dim(m) as u64 + t.coords(m)[e] as u64
        })
    };
    // COO first, then compress
    let triplets = (0..t.nnz())
        .map(|e| (key(row_modes, e), key(col_modes, e), t.values()[e]))
        .collect();
    CcsrMatrix::from_triplets(rows, cols, triplets)
}

/// Sparse sum. Each output row is merged through a dense accumulator of
/// length `global_cols` that is allocated once and zeroed only at touched
/// slots. Values that cancel to zero stay stored.
pub fn ccsr_sum(a: &CcsrMatrix, b: &CcsrMatrix) -> Result<CcsrMatrix> {
    if a.global_rows != b.global_rows || a.global_cols != b.global_cols {
        return Err(Error::dim(format!(
            "cannot add {}x{} and {}x{}",
            a.global_rows, a.global_cols, b.global_rows, b.global_cols
        )));
    }
    let mut acc = SumAccumulator::new(a.global_cols as usize);
    let mut out = CcsrMatrix::empty(a.global_rows, a.global_cols);
    let (mut ia, mut ib) = (0, 0);
    while ia < a.num_nonzero_rows() || ib < b.num_nonzero_rows() {
        let ra = a.nnz_row_ids.get(ia).copied().unwrap_or(u64::MAX);
        let rb = b.nnz_row_ids.get(ib).copied().unwrap_or(u64::MAX);
        let row = ra.min(rb);
        if ra == row {
            let (c, v) = a.row(ia);
            acc.add(c, v);
            ia += 1;
        }
        if rb == row {
            let (c, v) = b.row(ib);
            acc.add(c, v);
            ib += 1;
        }
        out.nnz_row_ids.push(row);
        acc.drain_into(&mut out.col_ids, &mut out.values);
        out.row_offsets.push(out.col_ids.len());
    }
    Ok(out)
}

struct SumAccumulator {
    dense: Vec<f64>,
    touched: Vec<bool>,
    cols: Vec<u64>,
}

impl SumAccumulator {
    fn new(width: usize) -> Self {
        Self {
            dense: vec![0.0; width],
            touched: vec![false; width],
            cols: Vec::new(),
        }
    }

    fn add(&mut self, cols: &[u64], vals: &[f64]) {
        for (&c, &v) in cols.iter().zip(vals) {
            let c = c as usize;
            if !self.touched[c] {
                self.touched[c] = true;
                self.cols.push(c as u64);
                self.dense[c] = v;
            } else {
                self.dense[c] += v;
            }
        }
    }

    fn drain_into(&mut self, col_ids: &mut Vec<u64>, values: &mut Vec<f64>) {
        self.cols.sort_unstable();
        for &c in &self.cols {
            let c = c as usize;
            col_ids.push(c as u64);
            values.push(self.dense[c]);
            self.dense[c] = 0.0;
            self.touched[c] = false;
        }
        self.cols.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    #[test]
    fn matricize_examples() {
        let s = Shape::new(vec![2, 2]).unwrap();
        let t = SparseTensor::from_entries(s, [([0, 0], 1.0), ([1, 1], 1.0)]).unwrap();
        let m = matricize_to_ccsr(&t, &[0], &[1]).unwrap();
        assert_eq!(m.nnz_row_ids(), &[0, 1]);
        assert_eq!(m.row_offsets(), &[0, 1, 2]);

        let s = Shape::new(vec![2, 3, 4]).unwrap();
        let t = SparseTensor::from_entries(s.clone(), [([1, 2, 3], 5.0)]).unwrap();
        let m = matricize_to_ccsr(&t, &[0, 1], &[2]).unwrap();
        assert_eq!(m.nnz_row_ids(), &[5]);
        assert_eq!(m.col_ids(), &[3]);
        assert_eq!(m.values(), &[5.0]);
        assert_eq!((m.global_rows(), m.global_cols()), (6, 4));

        let m = matricize_to_ccsr(&SparseTensor::empty(s), &[2], &[0, 1]).unwrap();
        assert_eq!(m.num_nonzero_rows(), 0);
        m.validate().unwrap();
    }

    #[test]
    fn matricize_rejects_bad_partition() {
        let s = Shape::new(vec![2, 3, 4]).unwrap();
        let t = SparseTensor::empty(s);
        assert!(matricize_to_ccsr(&t, &[0], &[1]).is_err());
        assert!(matricize_to_ccsr(&t, &[0, 1], &[1, 2]).is_err());
        assert!(matricize_to_ccsr(&t, &[0, 3], &[1, 2]).is_err());
    }

    #[test]
    fn sum_examples() {
        let a = CcsrMatrix::from_triplets(3, 2, vec![(0, 1, 2.0)]).unwrap();
        let b = CcsrMatrix::from_triplets(3, 2, vec![(0, 1, 3.0), (2, 0, 1.0)]).unwrap();
        let s = ccsr_sum(&a, &b).unwrap();
        assert_eq!(s.triplets(), vec![(0, 1, 5.0), (2, 0, 1.0)]);
        assert_eq!(ccsr_sum(&a, &CcsrMatrix::empty(3, 2)).unwrap(), a);

        let z = ccsr_sum(&b, &b.scaled(-1.0)).unwrap();
        assert_eq!(z.col_ids(), b.col_ids());
        assert_eq!(z.nnz_row_ids(), b.nnz_row_ids());
        assert!(z.values().iter().all(|&v| v == 0.0));

        assert!(ccsr_sum(&a, &CcsrMatrix::empty(3, 3)).is_err());
    }

    #[test]
    fn row_range_and_concat_roundtrip() {
        let m = CcsrMatrix::from_triplets(
            10,
            4,
            vec![(1, 0, 1.0), (1, 3, 2.0), (4, 2, 3.0), (9, 1, 4.0)],
        )
        .unwrap();
        let parts = [m.row_range(0, 3), m.row_range(3, 6), m.row_range(6, 10)];
        assert_eq!(parts[1].triplets(), vec![(4, 2, 3.0)]);
        assert_eq!(CcsrMatrix::concat_rows(&parts).unwrap(), m);
        assert!(CcsrMatrix::concat_rows(&[parts[1].clone(), parts[0].clone()]).is_err());
    }

    #[test]
    fn from_parts_validates() {
        assert!(CcsrMatrix::from_parts(4, 4, vec![1], vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(CcsrMatrix::from_parts(4, 4, vec![4], vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(CcsrMatrix::from_parts(4, 4, vec![3], vec![0, 1], vec![3], vec![1.0]).is_ok());
    }
}
