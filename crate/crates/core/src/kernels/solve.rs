use rayon::prelude::*;

use super::check_mttkrp_args;
use crate::error::{Error, Result};
use crate::tensor::{counting_sort_by_mode, FactorMatrix, ModeGrouping, SparseTensor};

/// Default number of Hadamard rows staged before a rank-k update.
pub const DEFAULT_BUFFER_ROWS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Rows of the output are processed in this many consecutive batches;
    /// only one batch of normal-equation blocks is live at a time.
    pub row_batches: usize,
    /// Staging buffer length for the rank-k accumulation.
    pub buffer_rows: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            row_batches: 1,
            buffer_rows: DEFAULT_BUFFER_ROWS,
        }
    }
}

impl SolveOptions {
    pub fn batches(row_batches: usize) -> Self {
        Self {
            row_batches,
            ..Self::default()
        }
    }
}

/// Per-row `R x R` normal-equation matrices `G(i)` (without regularization),
/// stored row-major and fully symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalBlocks {
    rank: usize,
    data: Vec<f64>,
    empty: Vec<bool>,
}

impl NormalBlocks {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rows(&self) -> usize {
        self.data.len() / (self.rank * self.rank).max(1)
    }

    pub fn block(&self, row: usize) -> &[f64] {
        let b = self.rank * self.rank;
        &self.data[row * b..(row + 1) * b]
    }

    /// Builds blocks from raw row-major data; a row counts as empty when
    /// its block is all zero.
    pub fn from_vec(rank: usize, data: Vec<f64>) -> Result<Self> {
        if rank == 0 || !data.len().is_multiple_of(rank * rank) {
            return Err(Error::dim(format!(
                "{} values do not form {rank}x{rank} blocks",
                data.len()
            )));
        }
        let empty = data
            .chunks_exact(rank * rank)
            .map(|b| b.iter().all(|&v| v == 0.0))
            .collect();
        Ok(Self { rank, data, empty })
    }

    /// Factors every `G(i) + reg * I`. Errors name the first failing row.
    pub fn factorize(&self, reg: f64, mode: usize) -> Result<FactoredBlocks> {
        check_reg(reg)?;
        let rank = self.rank;
        let mut chol = self.data.clone();
        let results: Vec<Result<()>> = chol
            .par_chunks_mut(rank * rank)
            .enumerate()
            .map(|(i, li)| {
                if self.empty[i] {
                    return Ok(());
                }
                for r in 0..rank {
                    li[r * rank + r] += reg;
                }
                cholesky_factor(li, rank).map_err(|reason| Error::Solver { mode, row: i, reason })
            })
            .collect();
        results.into_iter().collect::<Result<()>>()?;
        Ok(FactoredBlocks {
            rank,
            mode,
            reg,
            chol,
            empty: self.empty.clone(),
        })
    }
}

/// Solves `(G(i) + reg * I) x_i = rhs_i` for every row `i` of `mode`, where
///
/// `G(i)[r, s] = sum over entries with mode index i of weight * h_r * h_s`,
/// `h = prod_{n != mode} factors[n][i_n, :]`.
///
/// Entries are grouped by mode index with a counting sort; each row's
/// Hadamard vectors, scaled by `sqrt(weight)`, are staged in a buffer and
/// folded into `G(i)` by a symmetric rank-k update when the buffer fills.
/// Rows with no entries solve `reg * x = rhs_i`.
pub fn solve_factor(
    weights: &SparseTensor,
    factors: &[&FactorMatrix],
    rhs: &FactorMatrix,
    mode: usize,
    reg: f64,
    opts: SolveOptions,
) -> Result<FactorMatrix> {
    solve_impl(weights, factors, rhs, mode, reg, opts, false).map(|(x, _)| x)
}

/// [`solve_factor`] that also returns the assembled `G(i)` blocks.
pub fn solve_factor_with_blocks(
    weights: &SparseTensor,
    factors: &[&FactorMatrix],
    rhs: &FactorMatrix,
    mode: usize,
    reg: f64,
    opts: SolveOptions,
) -> Result<(FactorMatrix, NormalBlocks)> {
    solve_impl(weights, factors, rhs, mode, reg, opts, true)
        .map(|(x, g)| (x, g.expect("blocks requested")))
}

fn prepare<'a>(
    weights: &'a SparseTensor,
    factors: &'a [&'a FactorMatrix],
    mode: usize,
    opts: SolveOptions,
) -> Result<(usize, ModeGrouping)> {
    let rank = check_mttkrp_args(weights, factors, mode)?;
    if opts.row_batches == 0 || opts.buffer_rows == 0 {
        return Err(Error::param("row_batches and buffer_rows must be positive"));
    }
    if let Some(w) = weights.values().iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::param(format!(
            "solve_factor weights must be nonnegative, found {w}"
        )));
    }
    Ok((rank, counting_sort_by_mode(weights, mode)?))
}

fn check_reg(reg: f64) -> Result<()> {
    if reg >= 0.0 && reg.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("regularization {reg} must be finite and >= 0")))
    }
}

fn check_rhs(rhs: &FactorMatrix, rows: usize, rank: usize) -> Result<()> {
    if rhs.rows() != rows || rhs.rank() != rank {
        return Err(Error::dim(format!(
            "rhs is {}x{}, expected {rows}x{rank}",
            rhs.rows(),
            rhs.rank()
        )));
    }
    Ok(())
}

fn solve_impl(
    weights: &SparseTensor,
    factors: &[&FactorMatrix],
    rhs: &FactorMatrix,
    mode: usize,
    reg: f64,
    opts: SolveOptions,
    keep_blocks: bool,
) -> Result<(FactorMatrix, Option<NormalBlocks>)> {
    let (rank, groups) = prepare(weights, factors, mode, opts)?;
    let rows = weights.shape().dim(mode);
    check_rhs(rhs, rows, rank)?;
    check_reg(reg)?;
    let ctx = RowContext {
        weights,
        factors,
        mode,
        rank,
        groups: &groups,
        buffer_rows: opts.buffer_rows,
    };

    let mut x = FactorMatrix::zeros(rows, rank);
    let mut blocks = keep_blocks.then(|| vec![0.0; rows * rank * rank]);
    let batch = rows.div_ceil(opts.row_batches);
    for b in 0..opts.row_batches {
        let (lo, hi) = ((b * batch).min(rows), ((b + 1) * batch).min(rows));
        if lo == hi {
            continue;
        }
        // one batch of blocks live at a time
        let mut g = vec![0.0; (hi - lo) * rank * rank];
        g.par_chunks_mut(rank * rank)
            .enumerate()
            .for_each(|(k, gi)| ctx.assemble(lo + k, gi));
        if let Some(all) = blocks.as_mut() {
            all[lo * rank * rank..hi * rank * rank].copy_from_slice(&g);
        }
        let results: Vec<Result<()>> = x.as_mut_slice()[lo * rank..hi * rank]
            .par_chunks_mut(rank)
            .zip(g.par_chunks_mut(rank * rank))
            .enumerate()
            .map(|(k, (xi, gi))| {
                let i = lo + k;
                xi.copy_from_slice(rhs.row(i));
                solve_row(gi, rank, reg, xi, groups.group(i).is_empty()).map_err(|reason| {
                    Error::Solver {
                        mode,
                        row: i,
                        reason,
                    }
                })
            })
            .collect();
        results.into_iter().collect::<Result<()>>()?;
    }
    let blocks = blocks.map(|data| NormalBlocks {
        rank,
        data,
        empty: (0..rows).map(|i| groups.group(i).is_empty()).collect(),
    });
    Ok((x, blocks))
}

/// Assembles `G(i)` for every row of `mode` without solving.
pub fn normal_blocks(
    weights: &SparseTensor,
    factors: &[&FactorMatrix],
    mode: usize,
    opts: SolveOptions,
) -> Result<NormalBlocks> {
    let (rank, groups) = prepare(weights, factors, mode, opts)?;
    let rows = weights.shape().dim(mode);
    let ctx = RowContext {
        weights,
        factors,
        mode,
        rank,
        groups: &groups,
        buffer_rows: opts.buffer_rows,
    };
    let mut data = vec![0.0; rows * rank * rank];
    data.par_chunks_mut(rank * rank)
        .enumerate()
        .for_each(|(i, gi)| ctx.assemble(i, gi));
    Ok(NormalBlocks {
        rank,
        data,
        empty: (0..rows).map(|i| groups.group(i).is_empty()).collect(),
    })
}

/// Cholesky factors of `G(i) + reg * I`, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct FactoredBlocks {
    rank: usize,
    mode: usize,
    reg: f64,
    chol: Vec<f64>,
    empty: Vec<bool>,
}

impl FactoredBlocks {
    pub fn rows(&self) -> usize {
        self.empty.len()
    }

    /// Solves `(G(i) + reg * I) x_i = rhs_i` for every row.
    pub fn solve(&self, rhs: &FactorMatrix) -> Result<FactorMatrix> {
        let rank = self.rank;
        check_rhs(rhs, self.rows(), rank)?;
        let mut x = rhs.clone();
        let results: Vec<Result<()>> = x
            .as_mut_slice()
            .par_chunks_mut(rank)
            .zip(self.chol.par_chunks(rank * rank))
            .enumerate()
            .map(|(i, (xi, li))| {
                if self.empty[i] {
                    return empty_row(self.reg, xi).map_err(|reason| Error::Solver {
                        mode: self.mode,
                        row: i,
                        reason,
                    });
                }
                cholesky_substitute(li, rank, xi);
                Ok(())
            })
            .collect();
        results.into_iter().collect::<Result<()>>()?;
        Ok(x)
    }
}

struct RowContext<'a> {
    weights: &'a SparseTensor,
    factors: &'a [&'a FactorMatrix],
    mode: usize,
    rank: usize,
    groups: &'a ModeGrouping,
    buffer_rows: usize,
}

impl RowContext<'_> {
    /// Assembles `G(i)` into `g` (row-major, symmetric).
    fn assemble(&self, i: usize, g: &mut [f64]) {
        let rank = self.rank;
        let entries = self.groups.group(i);
        if entries.is_empty() {
            return;
        }
        let others: Vec<usize> = (0..self.weights.order()).filter(|&n| n != self.mode).collect();
        let cap = self.buffer_rows.min(entries.len());
        let mut buf = vec![0.0; cap * rank];
        let mut filled = 0;
        for &e in entries {
            let row = &mut buf[filled * rank..(filled + 1) * rank];
            row.fill(self.weights.values()[e].sqrt());
            for &n in &others {
                let a = self.factors[n].row(self.weights.coords(n)[e]);
                row.iter_mut().zip(a).for_each(|(h, &v)| *h *= v);
            }
            filled += 1;
            if filled == cap {
                syrk_lower(&buf[..filled * rank], rank, g);
                filled = 0;
            }
        }
        if filled > 0 {
            syrk_lower(&buf[..filled * rank], rank, g);
        }
        for r in 0..rank {
            for s in 0..r {
                g[s * rank + r] = g[r * rank + s];
            }
        }
    }
}

/// Lower triangle of `g += B^T B` for a row-major `k x rank` buffer `B`.
fn syrk_lower(b: &[f64], rank: usize, g: &mut [f64]) {
    for row in b.chunks_exact(rank) {
        for r in 0..rank {
            let br = row[r];
            let gr = &mut g[r * rank..r * rank + r + 1];
            gr.iter_mut().zip(&row[..=r]).for_each(|(x, &bs)| *x += br * bs);
        }
    }
}

fn empty_row(reg: f64, x: &mut [f64]) -> std::result::Result<(), String> {
    if reg > 0.0 {
        x.iter_mut().for_each(|v| *v /= reg);
        return Ok(());
    }
    if x.iter().all(|&v| v == 0.0) {
        return Ok(());
    }
    Err("no incident entries, zero regularization and nonzero rhs".into())
}

fn solve_row(g: &mut [f64], rank: usize, reg: f64, x: &mut [f64], empty: bool) -> std::result::Result<(), String> {
    if empty {
        return empty_row(reg, x);
    }
    for r in 0..rank {
        g[r * rank + r] += reg;
    }
    cholesky_solve(g, rank, x)
}

/// In-place Cholesky factorization and solve of the SPD system `a x = b`.
/// `a` is row-major `n x n` and is overwritten by its factor; `b` becomes
/// the solution. Fails when a pivot is not clearly positive.
pub fn cholesky_solve(a: &mut [f64], n: usize, b: &mut [f64]) -> std::result::Result<(), String> {
    cholesky_factor(a, n)?;
    cholesky_substitute(a, n, b);
    Ok(())
}

/// Lower Cholesky factor in place (the strict upper triangle is left as is).
fn cholesky_factor(a: &mut [f64], n: usize) -> std::result::Result<(), String> {
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    let tol = max_diag * n as f64 * f64::EPSILON;
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > tol) {
            return Err(format!(
                "matrix is singular or not positive definite (pivot {d:.3e} at {j})"
            ));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}

fn cholesky_substitute(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    fn single() -> (SparseTensor, FactorMatrix, FactorMatrix) {
        let s = Shape::new(vec![1, 1, 1]).unwrap();
        let t = SparseTensor::from_entries(s, [([0, 0, 0], 1.0)]).unwrap();
        let one = FactorMatrix::from_vec(1, 1, vec![1.0]).unwrap();
        let rhs = FactorMatrix::from_vec(1, 1, vec![5.0]).unwrap();
        (t, one, rhs)
    }

    #[test]
    fn one_by_one_systems() {
        let (t, one, rhs) = single();
        let f = [&one, &one, &one];
        let x = solve_factor(&t, &f, &rhs, 0, 0.0, SolveOptions::default()).unwrap();
        assert_eq!(x.as_slice(), &[5.0]);
        let x = solve_factor(&t, &f, &rhs, 0, 1.0, SolveOptions::default()).unwrap();
        assert!((x.as_slice()[0] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn empty_rows() {
        let s = Shape::new(vec![2, 1]).unwrap();
        let t = SparseTensor::from_entries(s, [([0, 0], 1.0)]).unwrap();
        let one = FactorMatrix::from_vec(1, 1, vec![1.0]).unwrap();
        let a = FactorMatrix::zeros(2, 1);
        let rhs = FactorMatrix::from_vec(2, 1, vec![1.0, 3.0]).unwrap();
        let x = solve_factor(&t, &[&a, &one], &rhs, 0, 2.0, SolveOptions::default()).unwrap();
        assert!((x.as_slice()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(x.as_slice()[1], 1.5);
        let err = solve_factor(&t, &[&a, &one], &rhs, 0, 0.0, SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Solver { mode: 0, row: 1, .. }), "{err}");
        let rhs0 = FactorMatrix::from_vec(2, 1, vec![1.0, 0.0]).unwrap();
        let x = solve_factor(&t, &[&a, &one], &rhs0, 0, 0.0, SolveOptions::default()).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn singular_without_reg_names_row() {
        // rank 2 with a single entry per row: G is rank one
        let s = Shape::new(vec![2, 1]).unwrap();
        let t = SparseTensor::from_entries(s, [([0, 0], 1.0), ([1, 0], 1.0)]).unwrap();
        let b = FactorMatrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let a = FactorMatrix::zeros(2, 2);
        let rhs = FactorMatrix::from_fn(2, 2, |_, _| 1.0);
        let err = solve_factor(&t, &[&a, &b], &rhs, 0, 0.0, SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Solver { row: 0, .. }));
        assert!(solve_factor(&t, &[&a, &b], &rhs, 0, 1e-3, SolveOptions::default()).is_ok());
    }

    #[test]
    fn rejects_negative_weights_and_bad_options() {
        let (t, one, rhs) = single();
        let neg = t.map_values(|_| -1.0);
        let f = [&one, &one, &one];
        assert!(solve_factor(&neg, &f, &rhs, 0, 1.0, SolveOptions::default()).is_err());
        assert!(solve_factor(&t, &f, &rhs, 0, -1.0, SolveOptions::default()).is_err());
        assert!(solve_factor(&t, &f, &rhs, 0, 1.0, SolveOptions::batches(0)).is_err());
        let bad_rhs = FactorMatrix::zeros(2, 1);
        assert!(solve_factor(&t, &f, &bad_rhs, 0, 1.0, SolveOptions::default()).is_err());
    }

    #[test]
    fn cholesky_small() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![2.0, 1.0];
        cholesky_solve(&mut a, 2, &mut b).unwrap();
        // [4 2; 2 3] x = [2; 1] -> x = [0.5, 0]
        assert!((b[0] - 0.5).abs() < 1e-15 && b[1].abs() < 1e-15);
        let mut a = vec![1.0, 1.0, 1.0, 1.0];
        assert!(cholesky_solve(&mut a, 2, &mut [1.0, 1.0]).is_err());
    }

    #[test]
    fn factored_blocks_match_direct_solve() {
        let s = Shape::new(vec![3, 2]).unwrap();
        let t = SparseTensor::from_entries(s, [([0, 0], 1.0), ([0, 1], 2.0), ([2, 1], 0.5)]).unwrap();
        let a = FactorMatrix::zeros(3, 2);
        let b = FactorMatrix::from_vec(2, 2, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let rhs = FactorMatrix::from_fn(3, 2, |i, r| (i + 2 * r) as f64 - 1.0);
        let direct = solve_factor(&t, &[&a, &b], &rhs, 0, 0.3, SolveOptions::default()).unwrap();
        let blocks = normal_blocks(&t, &[&a, &b], 0, SolveOptions::default()).unwrap();
        let f = blocks.factorize(0.3, 0).unwrap();
        assert_eq!(f.solve(&rhs).unwrap(), direct);
        let (_, kept) =
            solve_factor_with_blocks(&t, &[&a, &b], &rhs, 0, 0.3, SolveOptions::batches(2)).unwrap();
        assert_eq!(kept, blocks);
        assert!(matches!(blocks.factorize(0.0, 0), Err(Error::Solver { row: 2, .. })));
    }
}
