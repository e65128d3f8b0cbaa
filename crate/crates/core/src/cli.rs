//! Command-line driver behind the `sptc` binary: `gen`, `run` and `bench`.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::hypersparse::{pairwise_mttkrp, pairwise_tttp};
use crate::io::{parse_tns, trace_csv, write_factors, write_tns};
use crate::kernels::{mttkrp, solve_factor, tttp_auto, SolveOptions};
use crate::loss::LossRegistry;
use crate::optim::{run_from, Algorithm, CompletionState, Init, SolverConfig};
use crate::tensor::gen::{gen_function_tensor, gen_low_rank, gen_poisson_counts, random_sparse, LowRankConfig, ValueLaw};
use crate::tensor::{omega_of, FactorMatrix, RngState, Shape};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sptc", version, about = "Sparse tensor completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic tensor as .tns, plus ground-truth factors.
    Gen(GenArgs),
    /// Fit a CP model to a .tns file and write the convergence trace.
    Run(RunArgs),
    /// Time a kernel against its pairwise-contraction baseline.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenKind {
    /// Exact low-rank values on a random mask.
    Lowrank,
    /// Poisson counts from a log-link low-rank model.
    Poisson,
    /// Sampled smooth function, no ground truth.
    Function,
}

#[derive(Debug, Args)]
struct GenArgs {
    kind: GenKind,
    /// Comma-separated extents, e.g. 50,50,50.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    rank: usize,
    /// Probability that a cell is observed.
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    /// Ground-truth factor law for `lowrank`.
    #[arg(long, default_value = "uniform")]
    law: String,
    /// Standard deviation of the log-rate for `poisson`.
    #[arg(long, default_value_t = 0.3)]
    log_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output tensor; defaults to `<kind>.tns`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ground-truth factors; defaults to the output path with extension `.factors`.
    #[arg(long)]
    factors: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    /// Trace CSV destination; stdout when omitted.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value = "als")]
    algo: String,
    #[arg(long, default_value = "ls")]
    loss: String,
    #[arg(long, default_value_t = 10)]
    rank: usize,
    #[arg(long)]
    reg: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    inner_max: Option<usize>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    cg_tol: Option<f64>,
    #[arg(long)]
    cg_max: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    sample_rate: Option<f64>,
    #[arg(long, default_value = "uniform")]
    init: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Zero the timing column and drop host-dependent metadata.
    #[arg(long)]
    deterministic: bool,
    /// Also write the fitted factors here.
    #[arg(long)]
    save_factors: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BenchKernel {
    Mttkrp,
    Tttp,
    SolveFactor,
}

#[derive(Debug, Args)]
struct BenchArgs {
    kernel: BenchKernel,
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    /// Number of nonzeros (exclusive with --density).
    #[arg(long, conflicts_with = "density")]
    nnz: Option<usize>,
    /// Fraction of cells that are nonzero.
    #[arg(long)]
    density: Option<f64>,
    #[arg(long, default_value_t = 16)]
    rank: usize,
    /// Timed repeats; one extra warm-up run is discarded.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Output goes to stdout, diagnostics to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (name, result) = match cli.command {
        Command::Gen(a) => ("gen", cmd_gen(&a)),
        Command::Run(a) => ("run", cmd_run(&a)),
        Command::Bench(a) => ("bench", cmd_bench(&a)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code(&e);
            if code == EXIT_USAGE {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            code
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parameter(_) => EXIT_USAGE,
        Error::Solver { .. } | Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_DATA,
    }
}

fn with_path(e: Error, path: &std::path::Path) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        e => e,
    }
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    if threads == 0 {
        return Err(Error::param("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::param(format!("cannot build thread pool: {e}")))
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let shape = Shape::new(a.dims.clone())?;
    let rng = RngState::new(a.seed);
    let name = match a.kind {
        GenKind::Lowrank => "lowrank",
        GenKind::Poisson => "poisson",
        GenKind::Function => "function",
    };
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("{name}.tns")));
    let factors_path = a.factors.clone().unwrap_or_else(|| out.with_extension("factors"));
    let (tensor, factors) = match a.kind {
        GenKind::Lowrank => {
            let law: ValueLaw = a.law.parse()?;
            let lr = gen_low_rank(&LowRankConfig::new(shape, a.rank, a.fraction).law(law), rng)?;
            (lr.tensor, Some(lr.factors))
        }
        GenKind::Poisson => {
            let lr = gen_poisson_counts(&shape, a.rank, a.fraction, a.log_scale, rng)?;
            (lr.tensor, Some(lr.factors))
        }
        GenKind::Function => (gen_function_tensor(&shape, a.fraction, rng)?, None),
    };
    write_tns(&tensor, &out)?;
    eprintln!("wrote {} ({} nonzeros)", out.display(), tensor.nnz());
    if let Some(f) = factors {
        write_factors(&f, &factors_path)?;
        eprintln!("wrote {}", factors_path.display());
    }
    Ok(())
}

/// Builds the solver configuration from flags, rejecting flags that do not
/// apply to the chosen algorithm.
fn run_config(a: &RunArgs) -> Result<SolverConfig> {
    let algo: Algorithm = a.algo.parse()?;
    let mut misplaced = Vec::new();
    if algo != Algorithm::Sgd {
        if a.step.is_some() {
            misplaced.push("--step");
        }
        if a.sample_rate.is_some() {
            misplaced.push("--sample-rate");
        }
    }
    if !algo.uses_cg() {
        if a.cg_tol.is_some() {
            misplaced.push("--cg-tol");
        }
        if a.cg_max.is_some() {
            misplaced.push("--cg-max");
        }
    }
    if !matches!(algo, Algorithm::Als | Algorithm::Ccd) {
        if a.inner_max.is_some() {
            misplaced.push("--inner-max");
        }
        if a.inner_tol.is_some() {
            misplaced.push("--inner-tol");
        }
    }
    if !misplaced.is_empty() {
        return Err(Error::param(format!("{} not valid with --algo {algo}", misplaced.join(", "))));
    }

    let mut cfg = SolverConfig::new(algo, &a.loss, a.rank);
    cfg.init = a.init.parse::<Init>()?;
    cfg.seed = a.seed;
    cfg.deterministic = a.deterministic;
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { cfg.$field = v; })* };
    }
    set!(reg, max_iters, tol, inner_max, inner_tol, cg_tol, cg_max, step, sample_rate);
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let cfg = run_config(a)?;
    let loss = LossRegistry::with_builtins().get(&cfg.loss)?;
    let pool = thread_pool(a.threads)?;
    let t = parse_tns(&a.input).map_err(|e| with_path(e, &a.input))?;
    let (trace, state) = pool.install(|| {
        let mut state = CompletionState::init(t.shape(), &cfg);
        run_from(&t, &cfg, loss.as_ref(), &mut state).map(|tr| (tr, state))
    })?;
    let csv = trace_csv(&trace);
    match &a.trace {
        Some(p) => std::fs::write(p, csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    if let Some(p) = &a.save_factors {
        write_factors(&state.factors, p)?;
    }
    if let Some(last) = trace.last() {
        eprintln!(
            "{} iterations, objective {:.6e}, {} {:.6e}",
            last.iter,
            last.objective,
            trace.metric.label(),
            last.metric
        );
    }
    Ok(())
}

/// Mean, sample standard deviation and median.
fn summarize(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    (mean, var.sqrt(), median)
}

/// Times `f` `repeats + 1` times and drops the first run.
pub fn time_repeats(repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(repeats);
    for k in 0..=repeats {
        let start = Instant::now();
        f()?;
        if k > 0 {
            out.push(start.elapsed().as_secs_f64());
        }
    }
    Ok(out)
}

fn report_line(label: &str, samples: &[f64]) -> f64 {
    let (mean, sd, median) = summarize(samples);
    println!("{label:<12} {mean:.6} s +- {:.6} (2 sd), median {median:.6} s", 2.0 * sd);
    median
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    if a.repeats == 0 {
        return Err(Error::param("--repeats must be at least 1"));
    }
    if a.rank == 0 {
        return Err(Error::param("--rank must be positive"));
    }
    let shape = Shape::new(a.dims.clone())?;
    let nnz = match (a.nnz, a.density) {
        (Some(n), _) => n,
        (None, Some(d)) if d > 0.0 && d <= 1.0 => (d * shape.total() as f64).round() as usize,
        (None, Some(d)) => return Err(Error::param(format!("density {d} must be in (0, 1]"))),
        (None, None) => return Err(Error::param("one of --nnz or --density is required")),
    };
    let pool = thread_pool(a.threads)?;
    let rng = RngState::new(a.seed);
    let t = random_sparse(&shape, nnz, rng.split(0))?;
    let mut g = rng.split(1).generator();
    let factors: Vec<FactorMatrix> = shape
        .dims()
        .iter()
        .map(|&d| FactorMatrix::random_uniform(d, a.rank, 1.0, &mut g))
        .collect();
    let refs: Vec<&FactorMatrix> = factors.iter().collect();
    let opt: Vec<Option<&FactorMatrix>> = factors.iter().map(Some).collect();
    let kernel = match a.kernel {
        BenchKernel::Mttkrp => "mttkrp",
        BenchKernel::Tttp => "tttp",
        BenchKernel::SolveFactor => "solve-factor",
    };
    println!(
        "{kernel} dims={} nnz={} rank={} repeats={} threads={}",
        a.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x"),
        t.nnz(),
        a.rank,
        a.repeats,
        a.threads
    );
    pool.install(|| -> Result<()> {
        let order = t.order();
        match a.kernel {
            BenchKernel::Mttkrp => {
                // every mode per repeat, so the times average over the choice of output mode
                let fast = time_repeats(a.repeats, || {
                    (0..order).try_for_each(|n| mttkrp(&t, &refs, n).map(drop))
                })?;
                let slow = time_repeats(a.repeats, || {
                    (0..order).try_for_each(|n| pairwise_mttkrp(&t, &refs, n).map(drop))
                })?;
                let f = report_line("all-at-once", &fast);
                let s = report_line("pairwise", &slow);
                println!("median ratio (pairwise / all-at-once): {:.2}", s / f);
            }
            BenchKernel::Tttp => {
                let fast = time_repeats(a.repeats, || tttp_auto(&t, &opt).map(drop))?;
                let slow = time_repeats(a.repeats, || pairwise_tttp(&t, &opt).map(drop))?;
                let f = report_line("all-at-once", &fast);
                let s = report_line("pairwise", &slow);
                println!("median ratio (pairwise / all-at-once): {:.2}", s / f);
            }
            BenchKernel::SolveFactor => {
                let w = omega_of(&t);
                let rhs = mttkrp(&t, &refs, 0)?;
                let times = time_repeats(a.repeats, || {
                    solve_factor(&w, &refs, &rhs, 0, 1e-3, SolveOptions::default()).map(drop)
                })?;
                report_line("solve", &times);
            }
        }
        Ok(())
    })
}
