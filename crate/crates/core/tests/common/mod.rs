//! Dense brute-force references shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sptc::tensor::{FactorMatrix, RngState, Shape, SparseTensor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    RngState::new(seed).generator()
}

/// Random shape with `order` modes of extent `1..=max_dim`.
pub fn random_shape(g: &mut ChaCha8Rng, order: usize, max_dim: usize) -> Shape {
    Shape::new((0..order).map(|_| g.gen_range(1..=max_dim)).collect::<Vec<usize>>()).unwrap()
}

/// Random tensor where each cell is kept with probability `density`.
pub fn random_tensor(g: &mut ChaCha8Rng, shape: &Shape, density: f64) -> SparseTensor {
    let mut entries = Vec::new();
    for key in 0..shape.total() {
        if g.gen_bool(density) {
            entries.push((shape.delinearize(key), g.gen_range(-1.0..1.0)));
        }
    }
    SparseTensor::from_entries(shape.clone(), entries).unwrap()
}

pub fn random_factor(g: &mut ChaCha8Rng, rows: usize, rank: usize) -> FactorMatrix {
    FactorMatrix::from_fn(rows, rank, |_, _| g.gen_range(-1.0..1.0))
}

pub fn random_factors(g: &mut ChaCha8Rng, shape: &Shape, rank: usize) -> Vec<FactorMatrix> {
    shape.dims().iter().map(|&d| random_factor(g, d, rank)).collect()
}

/// Dense copy in row-major order.
pub fn dense(t: &SparseTensor) -> Vec<f64> {
    let mut d = vec![0.0; t.shape().total() as usize];
    for (&k, &v) in t.keys().iter().zip(t.values()) {
        d[k as usize] = v;
    }
    d
}

/// Observed mask, dense.
pub fn mask(t: &SparseTensor) -> Vec<bool> {
    let mut d = vec![false; t.shape().total() as usize];
    for &k in t.keys() {
        d[k as usize] = true;
    }
    d
}

/// `prod_{n != skip} A_n[c_n, r]`.
pub fn hadamard(factors: &[&FactorMatrix], coords: &[usize], r: usize, skip: Option<usize>) -> f64 {
    factors
        .iter()
        .enumerate()
        .filter(|(n, _)| Some(*n) != skip)
        .map(|(n, f)| f.get(coords[n], r))
        .product()
}

pub fn model(factors: &[&FactorMatrix], coords: &[usize]) -> f64 {
    (0..factors[0].rank()).map(|r| hadamard(factors, coords, r, None)).sum()
}

/// Loops over every cell of the dense tensor.
pub fn mttkrp_dense(t: &SparseTensor, factors: &[&FactorMatrix], mode: usize) -> FactorMatrix {
    let shape = t.shape();
    let rank = factors[if mode == 0 && factors.len() > 1 { 1 } else { 0 }].rank();
    let d = dense(t);
    let mut out = FactorMatrix::zeros(shape.dim(mode), rank);
    for key in 0..shape.total() {
        let v = d[key as usize];
        if v == 0.0 {
            continue;
        }
        let c = shape.delinearize(key);
        for r in 0..rank {
            let h = hadamard(factors, &c, r, Some(mode));
            out.set(c[mode], r, out.get(c[mode], r) + v * h);
        }
    }
    out
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Offset of block `d` in the flattened variable vector.
pub fn block_offsets(factors: &[&FactorMatrix]) -> Vec<usize> {
    let mut off = vec![0];
    for f in factors {
        off.push(off.last().unwrap() + f.rows() * f.rank());
    }
    off
}

/// Gradient of `m(e)` with respect to every factor entry (dense vector).
pub fn model_gradient(factors: &[&FactorMatrix], coords: &[usize]) -> Vec<f64> {
    let off = block_offsets(factors);
    let rank = factors[0].rank();
    let mut g = vec![0.0; *off.last().unwrap()];
    for d in 0..factors.len() {
        for r in 0..rank {
            g[off[d] + coords[d] * rank + r] = hadamard(factors, coords, r, Some(d));
        }
    }
    g
}

/// Dense Hessian of `sum_e phi(t_e, m_e) + reg ||A||^2` assembled from
/// `phi'`, `phi''` values at the observed entries of `t`. With `newton`
/// false the `phi'` (second derivative of `m`) terms are dropped.
pub fn dense_hessian(
    t: &SparseTensor,
    d1: &[f64],
    d2: &[f64],
    factors: &[&FactorMatrix],
    reg: f64,
    newton: bool,
) -> Vec<Vec<f64>> {
    let off = block_offsets(factors);
    let n = *off.last().unwrap();
    let rank = factors[0].rank();
    let order = factors.len();
    let mut h = vec![vec![0.0; n]; n];
    for (e, (c, _)) in t.iter().enumerate() {
        let gm = model_gradient(factors, &c);
        for a in 0..n {
            if gm[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                h[a][b] += d2[e] * gm[a] * gm[b];
            }
        }
        if newton {
            for d in 0..order {
                for p in 0..order {
                    if p == d {
                        continue;
                    }
                    for r in 0..rank {
                        let rest: f64 = (0..order)
                            .filter(|&q| q != d && q != p)
                            .map(|q| factors[q].get(c[q], r))
                            .product();
                        h[off[d] + c[d] * rank + r][off[p] + c[p] * rank + r] += d1[e] * rest;
                    }
                }
            }
        }
    }
    for (a, row) in h.iter_mut().enumerate() {
        row[a] += 2.0 * reg;
    }
    h
}

pub fn matvec(h: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    h.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub mod criteria;
