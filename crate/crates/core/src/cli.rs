//! Command-line front end.
//!
//! Exit codes: 0 success, 1 numerical or I/O failure, 2 usage error.

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::eigenbasis::{truncated_joint_eigenbasis, EigenbasisOptions, Selector};
use crate::error::{Error, Result};
use crate::linalg::fmt17;
use crate::mor::{run_demo, DemoConfig, InitialState};
use crate::mtx::write_atomic;
use crate::quadps::Kernel;
use crate::slice::{scan_slice_with, Execution, GridRange, SliceSpec};
use crate::tuple::{load_tuple, LambdaPoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const THREADS_ENV: &str = "QJAE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "qjae", version, about = "Quadratic joint pseudospectra and joint approximate eigenbases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan a 2D slice of the quadratic pseudospectrum function into a CSV grid.
    Pseudospectrum(PseudospectrumArgs),
    /// Compute a truncated joint approximate eigenbasis.
    Eigenbasis(EigenbasisArgs),
    /// Generate a commuting LTI pair, reduce it and compare outputs.
    MorDemo(MorDemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Svd,
    Eig,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Svd => Kernel::StackedSvd,
            KernelArg::Eig => Kernel::SquaredEig,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhiArg {
    Smallest,
    Largest,
}

impl From<PhiArg> for Selector {
    fn from(p: PhiArg) -> Self {
        match p {
            PhiArg::Smallest => Selector::Smallest,
            PhiArg::Largest => Selector::Largest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum X0Arg {
    Dominant,
    Random,
}

/// `min:max:count`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeArg(pub GridRange);

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, count] = parts[..] else {
            return Err(format!("expected min:max:count, got {s:?}"));
        };
        let min: f64 = min.parse().map_err(|e| format!("bad min {min:?}: {e}"))?;
        let max: f64 = max.parse().map_err(|e| format!("bad max {max:?}: {e}"))?;
        let count: usize = count.parse().map_err(|e| format!("bad count {count:?}: {e}"))?;
        GridRange::new(min, max, count).map(RangeArg).map_err(|e| e.to_string())
    }
}

/// Comma-separated reals.
#[derive(Debug, Clone, PartialEq)]
pub struct ListArg(pub Vec<f64>);

impl FromStr for ListArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_list(s).map(ListArg)
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|e| format!("bad number {t:?}: {e}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite value {t:?}"))
            }
        })
        .collect()
}

fn parse_axes(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected i,j, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("bad axis {a:?}: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("bad axis {b:?}: {e}"))?;
    if a == b {
        return Err(format!("axes must differ, got {a},{b}"));
    }
    Ok((a, b))
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be a positive finite number, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_nonnegative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 => Ok(v),
        Ok(v) => Err(format!("must be nonnegative, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_unit_open(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        Ok(v) => Err(format!("must lie in (0, 1), got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_count(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct PseudospectrumArgs {
    /// Matrix Market files, one per tuple member.
    #[arg(long, num_args = 1.., required = true)]
    pub matrices: Vec<PathBuf>,
    /// The two varying coordinates, `i,j`.
    #[arg(long, value_parser = parse_axes)]
    pub axes: (usize, usize),
    #[arg(long, allow_hyphen_values = true)]
    pub range_i: RangeArg,
    #[arg(long, allow_hyphen_values = true)]
    pub range_j: RangeArg,
    /// Values of all d coordinates; the two varying ones are ignored. Defaults to zeros.
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<ListArg>,
    /// Skip cells whose value provably exceeds this level.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_nonnegative)]
    pub cutoff: Option<f64>,
    #[arg(long, value_enum, default_value = "eig")]
    pub kernel: KernelArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (falls back to QJAE_THREADS, then all logical CPUs).
    #[arg(long, value_parser = parse_count)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EigenbasisArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub matrices: Vec<PathBuf>,
    /// Shift, one value per matrix. Defaults to zeros.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<ListArg>,
    #[arg(long, value_parser = parse_count)]
    pub k: usize,
    #[arg(long, default_value = "1e-5", allow_hyphen_values = true, value_parser = parse_positive)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "smallest")]
    pub phi: PhiArg,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MorDemoArgs {
    #[arg(long, default_value_t = 400, value_parser = parse_count)]
    pub n: usize,
    #[arg(long, default_value_t = 6, value_parser = parse_count)]
    pub k: usize,
    #[arg(long, default_value = "1e-5", allow_hyphen_values = true, value_parser = parse_positive)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "largest")]
    pub phi: PhiArg,
    /// Dimension of the dominant subspace. Defaults to k.
    #[arg(long, value_parser = parse_count)]
    pub k_dominant: Option<usize>,
    #[arg(long, default_value = "0.1", value_parser = parse_unit_open)]
    pub decay: f64,
    #[arg(long, value_enum, default_value = "dominant")]
    pub x0: X0Arg,
    /// Shift for the three Gram matrices. Defaults to zeros.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<ListArg>,
    #[arg(long, default_value = "trajectories.csv")]
    pub out: PathBuf,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() || matches!(e, Error::Io { .. }) {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Pseudospectrum(a) => run_pseudospectrum(&a),
        Command::Eigenbasis(a) => run_eigenbasis(&a),
        Command::MorDemo(a) => run_mor_demo(&a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NUMERICAL
        }
    }
}

fn thread_count(flag: Option<usize>) -> std::result::Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => parse_count(v.trim())
            .map(Some)
            .map_err(|e| Failure::Usage(format!("{THREADS_ENV}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn run_pseudospectrum(a: &PseudospectrumArgs) -> CmdResult {
    let threads = thread_count(a.threads)?;
    let tuple = load_tuple(&a.matrices)?;
    let base = LambdaPoint::new(a.base.clone().map(|l| l.0).unwrap_or_else(|| vec![0.0; tuple.d()]));
    if base.len() != tuple.d() {
        return Err(Failure::Usage(format!(
            "--base has {} values, {} matrices given",
            base.len(),
            tuple.d()
        )));
    }
    let spec = SliceSpec::new(a.axes.0, a.axes.1, base, a.range_i.0, a.range_j.0, a.cutoff)?;
    let kernel = Kernel::from(a.kernel);
    let result = with_threads(threads, || scan_slice_with(&tuple, &spec, kernel, Execution::Parallel))?;
    write_atomic(&a.out, result.to_csv().as_bytes())?;
    println!("cells={}", result.values.len());
    println!("pruned={}", result.pruned_count());
    Ok(())
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> std::result::Result<T, Failure> {
    match threads {
        None => Ok(f()?),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Numerical(format!("thread pool: {e}")))?;
            Ok(pool.install(f)?)
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> std::result::Result<T, Failure> {
    if threads.is_some_and(|n| n > 1) {
        eprintln!("warning: built without the `parallel` feature; running single-threaded");
    }
    Ok(f()?)
}

fn run_eigenbasis(a: &EigenbasisArgs) -> CmdResult {
    let tuple = load_tuple(&a.matrices)?;
    if a.k > tuple.n() {
        return Err(Failure::Usage(format!("--k {} exceeds n = {}", a.k, tuple.n())));
    }
    let lambda = LambdaPoint::new(a.lambda.clone().map(|l| l.0).unwrap_or_else(|| vec![0.0; tuple.d()]));
    if lambda.len() != tuple.d() {
        return Err(Failure::Usage(format!(
            "--lambda has {} values, {} matrices given",
            lambda.len(),
            tuple.d()
        )));
    }
    let opts = EigenbasisOptions::new(a.k, a.delta, a.phi.into());
    let result = truncated_joint_eigenbasis(&tuple, &lambda, &opts)?;
    result.write_dir(&a.out)?;
    println!("residual_sq={}", fmt17(result.residual_sq));
    println!("sweeps={}", result.jointdiag.sweeps);
    println!("converged={}", result.jointdiag.converged);
    if result.cluster_warning {
        eprintln!("warning: L eigenvalue cluster straddles the k-th cutoff; V depends on solver tie-breaking");
    }
    Ok(())
}

fn run_mor_demo(a: &MorDemoArgs) -> CmdResult {
    let k_dominant = a.k_dominant.unwrap_or(a.k);
    if a.k > a.n || k_dominant > a.n {
        return Err(Failure::Usage(format!(
            "--k ({}) and --k-dominant ({k_dominant}) must not exceed --n ({})",
            a.k, a.n
        )));
    }
    if let Some(ListArg(l)) = &a.lambda {
        if l.len() != 3 {
            return Err(Failure::Usage(format!("--lambda needs 3 values, got {}", l.len())));
        }
    }
    let cfg = DemoConfig {
        n: a.n,
        k: a.k,
        delta: a.delta,
        seed: a.seed,
        steps: a.steps,
        selector: a.phi.into(),
        k_dominant,
        decay: a.decay,
        x0: match a.x0 {
            X0Arg::Dominant => InitialState::Dominant,
            X0Arg::Random => InitialState::Random,
        },
        lambda: a.lambda.clone().map(|l| l.0),
    };
    let out = run_demo(&cfg)?;
    write_atomic(&a.out, out.trajectories_csv().as_bytes())?;
    print!("{}", out.report_lines());
    Ok(())
}
