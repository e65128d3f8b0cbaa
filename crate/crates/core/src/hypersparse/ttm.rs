use crate::error::{Error, Result};
use crate::hypersparse::{matricize_to_ccsr, CcsrMatrix};
use crate::tensor::{FactorMatrix, Shape, SparseTensor};

/// Sparse set of fibers, each carrying a dense length-`rank` payload.
///
/// This is the output of a sparse-times-dense contraction: fibers with no
/// contributing nonzero are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiSparseTensor {
    shape: Shape,
    keys: Vec<u64>,
    rank: usize,
    payloads: Vec<f64>,
}

impl SemiSparseTensor {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn payload(&self, fiber: usize) -> &[f64] {
        &self.payloads[fiber * self.rank..(fiber + 1) * self.rank]
    }

    /// Dense `total x rank` array with absent fibers as zeros.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.shape.total() as usize * self.rank];
        for (f, &k) in self.keys.iter().enumerate() {
            let k = k as usize;
            out[k * self.rank..(k + 1) * self.rank].copy_from_slice(self.payload(f));
        }
        out
    }
}

/// Multiplies the compressed rows of `a` by `b`; only nonzero rows of `a`
/// produce output fibers. O(nnz * R).
pub fn ccsr_times_dense(a: &CcsrMatrix, b: &FactorMatrix) -> Result<SemiSparseTensor> {
    if a.global_cols() != b.rows() as u64 {
        return Err(Error::dim(format!(
            "CCSR has {} columns but dense operand has {} rows",
            a.global_cols(),
            b.rows()
        )));
    }
    let shape = Shape::new(vec![a.global_rows() as usize])?;
    Ok(multiply_rows(a, b, shape))
}

fn multiply_rows(a: &CcsrMatrix, b: &FactorMatrix, shape: Shape) -> SemiSparseTensor {
    let rank = b.rank();
    let mut payloads = vec![0.0; a.num_nonzero_rows() * rank];
    for (slot, out) in payloads.chunks_exact_mut(rank).enumerate() {
        let (cols, vals) = a.row(slot);
        for (&c, &v) in cols.iter().zip(vals) {
            for (o, &w) in out.iter_mut().zip(b.row(c as usize)) {
                *o += v * w;
            }
        }
    }
    SemiSparseTensor {
        shape,
        keys: a.nnz_row_ids().to_vec(),
        rank,
        payloads,
    }
}

/// Tensor times matrix along `mode`: `z[rest, r] = sum_k t[rest, k] w[k, r]`,
/// computed by matricizing to CCSR with the remaining modes as rows.
pub fn ttm(t: &SparseTensor, w: &FactorMatrix, mode: usize) -> Result<SemiSparseTensor> {
    if mode >= t.order() {
        return Err(Error::param(format!(
            "mode {mode} out of range for order {}",
            t.order()
        )));
    }
    if t.order() < 2 {
        return Err(Error::param("ttm needs at least one uncontracted mode"));
    }
    if t.shape().dim(mode) != w.rows() {
        return Err(Error::dim(format!(
            "mode {mode} has extent {} but matrix has {} rows",
            t.shape().dim(mode),
            w.rows()
        )));
    }
    let rest: Vec<usize> = (0..t.order()).filter(|&n| n != mode).collect();
    let m = matricize_to_ccsr(t, &rest, &[mode])?;
    Ok(multiply_rows(&m, w, t.shape().select(&rest)?))
}

/// MTTKRP by pairwise contraction: a TTM over the first non-target mode,
/// then a fiber-wise Hadamard product with the remaining factors.
pub fn pairwise_mttkrp(
    t: &SparseTensor,
    factors: &[&FactorMatrix],
    mode: usize,
) -> Result<FactorMatrix> {
    let rank = crate::kernels::check_mttkrp_args(t, factors, mode)?;
    if t.order() < 2 {
        return Err(Error::param("pairwise MTTKRP needs order >= 2"));
    }
    let contracted = if mode == 0 { 1 } else { 0 };
    let z = ttm(t, factors[contracted], contracted)?;
    let rest: Vec<usize> = (0..t.order()).filter(|&n| n != contracted).collect();
    let target_pos = rest.iter().position(|&n| n == mode).unwrap();
    let mut out = FactorMatrix::zeros(t.shape().dim(mode), rank);
    let mut coords = vec![0usize; rest.len()];
    let mut h = vec![0.0; rank];
    for f in 0..z.len() {
        z.shape().delinearize_into(z.keys()[f], &mut coords);
        h.copy_from_slice(z.payload(f));
        for (pos, &n) in rest.iter().enumerate() {
            if n != mode {
                for (x, &a) in h.iter_mut().zip(factors[n].row(coords[pos])) {
                    *x *= a;
                }
            }
        }
        for (o, &x) in out.row_mut(coords[target_pos]).iter_mut().zip(&h) {
            *o += x;
        }
    }
    Ok(out)
}

/// TTTP by pairwise contraction: each provided factor is contracted into a
/// materialized `nnz x R` intermediate in turn, and the rank index is summed
/// out at the end.
pub fn pairwise_tttp(t: &SparseTensor, factors: &[Option<&FactorMatrix>]) -> Result<SparseTensor> {
    let rank = crate::kernels::check_tttp_args(t, factors)?;
    let provided: Vec<usize> = (0..t.order()).filter(|&n| factors[n].is_some()).collect();
    let m = t.nnz();
    let first = provided[0];
    let mut x: Vec<f64> = Vec::with_capacity(m * rank);
    let a = factors[first].unwrap();
    for (e, (&v, &i)) in t.values().iter().zip(t.coords(first)).enumerate() {
        debug_assert_eq!(x.len(), e * rank);
        x.extend(a.row(i).iter().map(|&u| v * u));
    }
    for &n in &provided[1..] {
        let a = factors[n].unwrap();
        let next: Vec<f64> = x
            .chunks_exact(rank)
            .zip(t.coords(n))
            .flat_map(|(xe, &i)| xe.iter().zip(a.row(i)).map(|(p, q)| p * q))
            .collect();
        x = next;
    }
    let values = x.chunks_exact(rank).map(|xe| xe.iter().sum()).collect();
    t.with_values(values)
}
