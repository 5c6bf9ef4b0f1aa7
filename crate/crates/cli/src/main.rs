//! `tdl-gnss` command-line tool.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data, model or I/O
//! errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::LevelFilter;
use tdl_gnss::pipeline::{Method, ReportFormat, TrainMode};
use tdl_gnss::synth::Preset;

#[derive(Debug, Parser)]
#[command(
    name = "tdl-gnss",
    version,
    about = "Differentiable GNSS positioning with learned pseudorange weights and biases"
)]
pub struct Cli {
    /// TOML run configuration; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// More diagnostics on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only report errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic urban-canyon dataset.
    Simulate(SimulateArgs),
    /// Train a network on a dataset and write a checkpoint and training log.
    Train(TrainArgs),
    /// Solve every epoch with one method and write JSON-lines solutions.
    Solve(SolveArgs),
    /// Compare methods on a dataset with ground truth.
    Evaluate(EvaluateArgs),
    /// Show per-satellite predictions for one epoch.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output dataset (JSON lines).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of epochs to generate.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Scenario preset; replaces the config file's [scenario] table.
    #[arg(long, value_parser = clap::value_parser!(Preset))]
    pub preset: Option<Preset>,
    /// Pseudorange noise standard deviation (m).
    #[arg(long, value_name = "M")]
    pub noise: Option<f64>,
    /// Probability that an eligible satellite is NLOS.
    #[arg(long, value_name = "P")]
    pub nlos_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training dataset.
    #[arg(long, value_name = "FILE")]
    pub train: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(TrainMode))]
    pub mode: TrainMode,
    /// Checkpoint to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Training log CSV (default: the checkpoint path with a .log.csv extension).
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Parameter initialization seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training epochs (default depends on the mode).
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, value_name = "RATE")]
    pub lr: Option<f64>,
    /// One averaged step per training epoch instead of one step per data epoch.
    #[arg(long)]
    pub full_batch: bool,
    /// Continue from an existing checkpoint instead of a fresh network.
    #[arg(long, value_name = "FILE")]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Trained network (repeatable; one per architecture).
    #[arg(long = "checkpoint", value_name = "FILE")]
    pub checkpoints: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Dataset to solve.
    #[arg(long, value_name = "FILE")]
    pub test: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(Method))]
    pub method: Method,
    #[command(flatten)]
    pub models: ModelArgs,
    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset with ground truth.
    #[arg(long, value_name = "FILE")]
    pub test: PathBuf,
    /// Comma-separated methods (default: the classical baselines plus every
    /// method a given checkpoint enables).
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(Method))]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub models: ModelArgs,
    /// Summary report (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = clap::value_parser!(ReportFormat))]
    pub format: ReportFormat,
    /// Also write per-epoch errors of every method as CSV.
    #[arg(long, value_name = "FILE")]
    pub series: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long, value_name = "FILE")]
    pub test: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// Zero-based epoch index.
    #[arg(long, default_value_t = 0)]
    pub epoch: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => LevelFilter::Error,
        (false, 0) => LevelFilter::Info,
        (false, 1) => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();

    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
