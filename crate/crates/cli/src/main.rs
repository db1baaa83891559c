//! `sblr` command-line frontend: simulate data, fit, cross-validate, evaluate
//! recovery and benchmark scaling. Every command writes a `manifest.json`
//! next to its outputs; `--config manifest.json` replays a run.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sblr::bench::PeakAlloc;

#[global_allocator]
static ALLOC: PeakAlloc = PeakAlloc::new();

pub(crate) fn allocator() -> &'static PeakAlloc {
    &ALLOC
}

#[derive(Parser, Debug)]
#[command(name = "sblr", version, about = "Symmetric bilinear logistic regression for longitudinal networks")]
struct Cli {
    /// Worker threads for restarts, CV cells and ladders (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset with its ground truth.
    Simulate(SimulateArgs),
    /// Fit one model at fixed penalties.
    Fit(FitArgs),
    /// Cross-validate over the penalty grid and refit at the selected penalty.
    Cv(CvArgs),
    /// Score a fitted edge set against ground truth, or run a replicate study.
    Evaluate(EvaluateArgs),
    /// Time full coordinate sweeps along a size ladder.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub(crate) struct Common {
    /// JSON config, or a manifest from an earlier run; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub(crate) struct SolverFlags {
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_cycles: Option<usize>,
    /// Disable the descent safeguard.
    #[arg(long)]
    pub no_safeguard: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub(crate) struct GeneratorFlags {
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of nodes.
    #[arg(long = "v")]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub noise_frac: Option<f64>,
    #[arg(long)]
    pub max_visits: Option<usize>,
    /// Multiplies both signal age effects.
    #[arg(long)]
    pub effect_scale: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub generator: GeneratorFlags,
    /// Dataset file format.
    #[arg(long, value_enum)]
    pub format: Option<DataFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub(crate) enum DataFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Symmetrize networks before validation.
    #[arg(long)]
    pub symmetrize: bool,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct CvArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Where standardization statistics come from: fold or global.
    #[arg(long)]
    pub standardize: Option<String>,
    /// Number of delta values on the grid.
    #[arg(long)]
    pub n_deltas: Option<usize>,
    /// Comma-separated eta values.
    #[arg(long, value_delimiter = ',')]
    pub etas: Option<Vec<f64>>,
    /// Fit every cell from random starts only.
    #[arg(long)]
    pub no_warm_start: bool,
    #[arg(long)]
    pub symmetrize: bool,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Fit report (from `fit` or `cv`) whose selected edges are scored.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Truth record written by `simulate`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Run a replicate study with this many synthetic datasets instead.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Comma-separated methods for the replicate study.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub generator: GeneratorFlags,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub standardize: Option<String>,
    #[arg(long)]
    pub n_deltas: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub etas: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dimension to vary: n, k or v.
    #[arg(long)]
    pub axis: Option<String>,
    /// Comma-separated ladder values.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<usize>>,
    /// Fixed subject count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Fixed node count.
    #[arg(long = "v")]
    pub nodes: Option<usize>,
    /// Fixed component budget.
    #[arg(long)]
    pub k: Option<usize>,
    /// Timed sweeps per point.
    #[arg(long)]
    pub cycles: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot start {t} worker threads: {e}");
            return ExitCode::from(commands::EXIT_CONFIG);
        }
    }
    let outcome = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Cv(a) => commands::cv(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Bench(a) => commands::bench(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
