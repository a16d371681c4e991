//! `survmdn` command-line tool. Every command writes its outputs and a
//! `manifest.json` into `--out`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical or
//! metric failure, 4 gradient check failure.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use survmdn::data::SimKind;
use survmdn::mdn::Base;

#[derive(Parser)]
#[command(name = "survmdn", version, about = "Survival mixture density networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a CSV dataset.
    Train(TrainArgs),
    /// Compute truncated concordance, IBS and IBLL of a model on a dataset.
    Evaluate(EvaluateArgs),
    /// Draw a synthetic dataset and its ground-truth survival curves.
    Simulate(SimulateArgs),
    /// Export predicted survival curves for given inputs.
    Curves(CurvesArgs),
    /// Compare analytic and finite-difference gradients on a random model.
    Gradcheck(GradcheckArgs),
    /// Random hyperparameter search; the best trial is kept and evaluated.
    RandomSearch(TrainArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "time")]
    time_col: String,
    #[arg(long, default_value = "event")]
    event_col: String,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    splits: String,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Censoring-survival levels defining the truncation times.
    #[arg(long, default_value = "1e-8,0.2,0.4")]
    levels: String,
    /// Points of the integration grid.
    #[arg(long, default_value_t = survmdn::metrics::DEFAULT_GRID)]
    grid: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    kind: SimKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CurvesArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    grid_min: f64,
    #[arg(long)]
    grid_max: f64,
    #[arg(long, default_value_t = 101)]
    grid_points: usize,
    /// CSV with a header row and one feature vector per row.
    #[arg(long)]
    inputs: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value = "gaussian")]
    base: Base,
    /// Batch size.
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    batch_norm: bool,
    /// Dropout rate of the model; masks are off during the check.
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    corrupt_gradient: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
