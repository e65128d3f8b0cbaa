//! Write a tensor as FROSTT `.tns`, read it back, and serialize a run trace.

use sptc::io::{fingerprint, parse_tns, parse_trace, tns_string, write_tns, write_trace};
use sptc::optim::{run, Algorithm, SolverConfig};
use sptc::tensor::gen::{gen_low_rank, LowRankConfig};
use sptc::tensor::{RngState, Shape};

fn main() -> sptc::Result<()> {
    let dir = std::env::temp_dir().join("sptc-tns-roundtrip");
    std::fs::create_dir_all(&dir)?;
    let t = gen_low_rank(&LowRankConfig::new(Shape::new(vec![8, 9, 10])?, 2, 0.2), RngState::new(4))?.tensor;

    let path = dir.join("small.tns");
    write_tns(&t, &path)?;
    let back = parse_tns(&path)?;
    assert_eq!(back, t);
    println!("{}", tns_string(&t).lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("...\nsha256 {}", fingerprint(&t));

    let mut cfg = SolverConfig::new(Algorithm::Als, "ls", 2);
    cfg.deterministic = true;
    cfg.max_iters = 5;
    let trace = run(&back, &cfg)?;
    let csv = dir.join("trace.csv");
    write_trace(&trace, &csv)?;
    assert_eq!(parse_trace(&csv)?, trace);
    print!("{}", std::fs::read_to_string(&csv)?);
    Ok(())
}
