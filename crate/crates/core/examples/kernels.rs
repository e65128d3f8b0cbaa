//! The three multi-tensor kernels on a small random tensor: MTTKRP, TTTP
//! (and SDDMM for matrices) and Solve Factor.

use sptc::kernels::{mttkrp, sddmm, solve_factor, tttp, SolveOptions};
use sptc::tensor::gen::random_sparse;
use sptc::tensor::{omega_of, FactorMatrix, RngState, Shape, SparseTensor};

fn main() -> sptc::Result<()> {
    let shape = Shape::new(vec![30, 40, 50])?;
    let t = random_sparse(&shape, 2_000, RngState::new(1))?;
    let mut g = RngState::new(2).generator();
    let factors: Vec<FactorMatrix> = shape
        .dims()
        .iter()
        .map(|&d| FactorMatrix::random_uniform(d, 8, 1.0, &mut g))
        .collect();
    let refs: Vec<&FactorMatrix> = factors.iter().collect();

    // MTTKRP: contract with every factor but one
    for mode in 0..3 {
        let m = mttkrp(&t, &refs, mode)?;
        println!("mttkrp mode {mode}: {}x{}, |out|_F = {:.4}", m.rows(), m.rank(), m.frob_norm());
    }

    // TTTP with all factors is the model at the nonzeros, scaled by t
    let all: Vec<Option<&FactorMatrix>> = factors.iter().map(Some).collect();
    let x = tttp(&t, &all, 4)?;
    println!("tttp: {} values on the same pattern, first {:.4}", x.nnz(), x.values()[0]);

    // absent operands drop out of the product
    let partial = [Some(&factors[0]), None, Some(&factors[2])];
    println!("tttp (mode 1 skipped): first {:.4}", tttp(&t, &partial, 1)?.values()[0]);

    let s = SparseTensor::from_entries(Shape::new(vec![2, 2])?, [([0, 0], 1.0), ([1, 1], 2.0)])?;
    let u = FactorMatrix::from_vec(2, 1, vec![1.0, 2.0])?;
    let v = FactorMatrix::from_vec(2, 1, vec![3.0, 4.0])?;
    println!("sddmm: {:?}", sddmm(&s, &u, &v)?.values());

    // Solve Factor: per-row regularized normal equations, here one ALS update
    let omega = omega_of(&t);
    let rhs = mttkrp(&t, &refs, 0)?;
    let updated = solve_factor(&omega, &refs, &rhs, 0, 1e-3, SolveOptions::default())?;
    println!("solve_factor: new mode-0 factor, |A|_F = {:.4}", updated.frob_norm());
    Ok(())
}
