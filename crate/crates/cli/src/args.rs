use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use itfl_core::flsim::Aggregator;

#[derive(Debug, Parser)]
#[command(
    name = "itfl",
    version,
    about = "Private Byzantine-resilient federated aggregation experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Provision a low-cost session file (triples, MAC keys, pads).
    Init(InitArgs),
    /// Run training and write per-iteration metrics.
    Train(TrainArgs),
    /// Render metric series from a CSV file to SVG.
    Plot(PlotArgs),
    /// Run the acceptance battery and print a pass/fail matrix.
    Verify(VerifyArgs),
}

/// Options shared by `init` and `train`.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment configuration (TOML); the bundled default if omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `train.iterations`.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Overrides the configured aggregator.
    #[arg(long)]
    pub aggregator: Option<Aggregator>,
    /// Session file; overrides `output.session`.
    #[arg(long)]
    pub session: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InitArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Metrics CSV written by `train`.
    pub csv: PathBuf,
    /// SVG path; defaults to the CSV path with an `.svg` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Columns to draw.
    #[arg(long, value_delimiter = ',', default_value = "accuracy,loss,slack")]
    pub series: Vec<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Configuration to validate before running the battery.
    #[arg(long)]
    pub config: Option<PathBuf>,
}
