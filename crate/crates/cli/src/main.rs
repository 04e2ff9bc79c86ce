//! `curvgraph`: graph generation, curvature computation, transport defect
//! certificates, heat-semigroup verification, and Laplacian spectra behind
//! one binary with reproducible JSON output.
//!
//! Exit codes: 0 on success or a passing verification, 1 when a verification
//! runs to completion with a failing verdict, 2 on any input error.

mod commands;
mod report;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

/// How a command run can end short of a clean pass.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, malformed graph JSON, pairs out of range, and the like.
    Input(String),
    /// The requested verification produced a failing verdict.
    Check,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure::Input(msg.into())
    }
}

#[derive(Parser)]
#[command(name = "curvgraph", version, about = "Large-scale curvature on weighted graphs")]
struct Cli {
    /// Worker threads for pair sweeps; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a generated graph as canonical JSON.
    Gen(GenArgs),
    /// Curvature of one ordered pair or of all pairs within the radius.
    Curvature(CurvatureArgs),
    /// Transport defect certificates for ordered pairs.
    Defect(DefectArgs),
    /// Run one of the semigroup verification sweeps.
    Verify(VerifyArgs),
    /// Eigenvalues of the negated Laplacian, ascending.
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    #[value(name = "hex_torus")]
    HexTorus,
    #[value(name = "square_torus")]
    SquareTorus,
    Cycle,
    Path,
    Complete,
    Star,
    Tree,
    Gnp,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Linear,
    Ollivier,
    Quadratic,
    Exponential,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    Linear,
    Quadratic,
    Exponential,
    Decay,
    Gmono,
    Harnack,
}

#[derive(clap::Args)]
pub struct GenArgs {
    /// Graph family to generate.
    #[arg(long, value_enum)]
    family: Family,
    /// Family size: `W,H` for tori, `N,P` for gnp, a single integer otherwise.
    #[arg(long)]
    size: String,
    /// Seed for the random families.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct CurvatureArgs {
    /// Graph JSON file, or `-` for stdin.
    #[arg(long)]
    graph: String,
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Curvature scale R.
    #[arg(long, default_value_t = 1)]
    radius: u32,
    /// One ordered pair `X,Y`.
    #[arg(long, conflicts_with = "all_pairs")]
    pair: Option<String>,
    /// Every ordered pair with 0 < d(x,y) <= R.
    #[arg(long)]
    all_pairs: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for the nonlinear optimizer.
    #[arg(long)]
    seed: Option<u64>,
    /// Multistart restarts for the nonlinear variants.
    #[arg(long)]
    restarts: Option<usize>,
    /// Iteration cap per descent run.
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(clap::Args)]
pub struct DefectArgs {
    /// Graph JSON file, or `-` for stdin.
    #[arg(long)]
    graph: String,
    #[arg(long, default_value_t = 1)]
    radius: u32,
    /// One ordered pair `X,Y`.
    #[arg(long, conflicts_with = "all_pairs")]
    pair: Option<String>,
    #[arg(long)]
    all_pairs: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(clap::Args)]
pub struct VerifyArgs {
    /// Graph JSON file, or `-` for stdin.
    #[arg(long)]
    graph: String,
    #[arg(long, value_enum)]
    theorem: Theorem,
    /// Curvature scale R.
    #[arg(long)]
    radius: u32,
    /// Curvature rate: a number, or `auto` to derive it from the graph.
    #[arg(long = "K", default_value = "auto", allow_negative_numbers = true)]
    k: String,
    /// Seed for the sampled test functions.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of sampled test functions.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Re-establish the nonnegative-curvature hypothesis through transport
    /// certificates (harnack only).
    #[arg(long)]
    certify: bool,
    /// Base vertex for the interpolation trace (gmono only).
    #[arg(long, default_value_t = 0)]
    vertex: usize,
    /// Final time for the interpolation trace (gmono only).
    #[arg(long, default_value_t = 2.0)]
    time: f64,
    /// Grid steps for the interpolation trace (gmono only).
    #[arg(long, default_value_t = 40)]
    steps: usize,
    /// Also write a plot-ready CSV of (grid point, margin) to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct SpectrumArgs {
    /// Graph JSON file, or `-` for stdin.
    #[arg(long)]
    graph: String,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// Explicit `--seed` wins; otherwise the `CURVGRAPH_SEED` environment
/// variable replaces the built-in default of 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("CURVGRAPH_SEED") {
        Ok(raw) => raw.trim().parse().map_err(|_| {
            Failure::input(format!("CURVGRAPH_SEED must be an unsigned integer, got {raw:?}"))
        }),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(Failure::input(format!("CURVGRAPH_SEED: {e}"))),
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen(args) => commands::gen(args),
        Command::Curvature(args) => commands::curvature(args),
        Command::Defect(args) => commands::defect(args),
        Command::Verify(args) => commands::verify(args),
        Command::Spectrum(args) => commands::spectrum(args),
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.jobs {
        // A scoped pool makes `--jobs` apply to every sweep underneath,
        // including the parallel verification grids.
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(Failure::input(format!("--jobs: {e}"))),
        },
        None => dispatch(cli),
    };
    let code = match outcome {
        Ok(()) => 0,
        Err(Failure::Check) => {
            eprintln!("verification failed");
            1
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    };
    std::process::exit(code);
}
