//! `confmil`: generate the synthetic dataset, train and evaluate the
//! attention MIL model, run baselines, check gradients, and render reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod plot;

/// Exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INPUT: u8 = 2;
    pub const NUMERIC: u8 = 3;
    pub const COMPATIBILITY: u8 = 4;
    pub const CHECK: u8 = 5;
}

#[derive(Debug, Parser)]
#[command(name = "confmil", version, about = "Multiple-instance learning on conformer ensembles")]
pub struct Cli {
    /// Leave the wall-clock timestamp out of output headers.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic bipyridine dataset.
    Gen(GenArgs),
    /// Train the attention model on a dataset split.
    Train(TrainArgs),
    /// Evaluate a checkpoint: metrics, key-instance retrieval, attention table.
    Eval(EvalArgs),
    /// Run a baseline on the same split.
    Baseline(BaselineArgs),
    /// Finite-difference check of the model gradients.
    Gradcheck(GradcheckArgs),
    /// Render per-bag attention plots and a summary from an attention CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Number of molecules.
    #[arg(long, default_value_t = 1157, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write dataset statistics as key=value lines.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitName {
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Seed of the train/validation/test shuffle.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Bags taken from the front of the training split.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub train_size: u64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Decay the learning rate linearly to this value by the last epoch.
    #[arg(long)]
    pub lr_final: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    /// Early-stopping patience in epochs.
    #[arg(long, default_value_t = 20)]
    pub patience: usize,
    /// Seeds parameter initialisation and batch shuffling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub model_out: PathBuf,
    #[arg(long)]
    pub log_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitName::Test)]
    pub split: SplitName,
    #[command(flatten)]
    pub split_seed: SplitArgs,
    #[arg(long)]
    pub metrics_out: PathBuf,
    #[arg(long)]
    pub attention_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    Rf,
    LowestEnergy,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(value_enum)]
    pub kind: BaselineKind,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitName::Test)]
    pub split: SplitName,
    #[command(flatten)]
    pub split_seed: SplitArgs,
    /// Training bags for the forest, from the front of the training split.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub train_size: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub trees: u64,
    #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u64).range(1..))]
    pub bits: u64,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    /// Seeds bootstrap samples and feature subsets.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Synthetic bags per parameter draw.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub bags: u64,
    /// Number of parameter draws.
    #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u64).range(1..))]
    pub param_seeds: u64,
    #[arg(long, hide = true)]
    pub corrupt_gradient: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub attention_csv: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("confmil: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
