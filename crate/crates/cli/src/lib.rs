//! Command-line front end: training runs, sampling, evaluation and
//! parameter-count tables on top of the `eeqdm` engine.

pub mod checkpoint;
pub mod commands;
pub mod config;
mod error;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};

use checkpoint::Checkpoint;
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "eeqdm", version, about = "Quantum diffusion models on a statevector simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Train a model and write checkpoint.ckpt, loss.csv and timing.csv.
    Train(TrainArgs),
    /// Generate images from a checkpoint as binary PGM files.
    Sample(SampleArgs),
    /// Per-class image and distribution metrics against the test split.
    Eval(EvalArgs),
    /// Parameter counts of both layouts and the relative reduction.
    ParamsCompare(ParamsArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Flat key = value file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Continue a checkpoint up to --epochs total epochs.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// eeqdm or qddm.
    #[arg(long)]
    pub model: Option<String>,
    /// mnist or cifar10.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Image side length: 8, 16 or 32.
    #[arg(long)]
    pub resolution: Option<String>,
    #[arg(long)]
    pub depth: Option<String>,
    #[arg(long)]
    pub timesteps: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub subset_size: Option<String>,
    /// Digit to keep, or "none".
    #[arg(long)]
    pub class_filter: Option<String>,
    /// Condition the circuit on class labels (true/false).
    #[arg(long)]
    pub conditional: Option<String>,
    #[arg(long)]
    pub data_dir: Option<String>,
    #[arg(long)]
    pub output_dir: Option<String>,
}

impl TrainArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        [
            ("model", &self.model),
            ("dataset", &self.dataset),
            ("resolution", &self.resolution),
            ("depth", &self.depth),
            ("timesteps", &self.timesteps),
            ("epochs", &self.epochs),
            ("batch_size", &self.batch_size),
            ("learning_rate", &self.learning_rate),
            ("seed", &self.seed),
            ("subset_size", &self.subset_size),
            ("class_filter", &self.class_filter),
            ("conditional", &self.conditional),
            ("data_dir", &self.data_dir),
            ("output_dir", &self.output_dir),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Class label for conditional checkpoints.
    #[arg(long)]
    pub label: Option<u8>,
    /// Also write every intermediate frame.
    #[arg(long)]
    pub trajectory: bool,
    #[arg(long, default_value = "samples")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Overrides the data directory stored in the checkpoint.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Generated and real images per class.
    #[arg(long, default_value_t = 10)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    /// Comma-separated even data-qubit counts.
    #[arg(long, value_delimiter = ',', default_value = "8,10,12,14,16,18")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub depth: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Final configuration for `train`: defaults (or the resumed checkpoint's
/// snapshot), then the config file, then flags.
pub fn resolve_train_config(args: &TrainArgs, resumed: Option<&Checkpoint>) -> CliResult<RunConfig> {
    let mut config = resumed.map(|ck| ck.config.clone()).unwrap_or_default();
    if let Some(path) = &args.config {
        config.apply_file(path)?;
    }
    for (key, value) in args.overrides() {
        config.set(key, value)?;
    }
    config.validate()?;
    Ok(config)
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(args) => {
            let resumed = args.resume.as_deref().map(Checkpoint::load).transpose()?;
            let config = resolve_train_config(&args, resumed.as_ref())?;
            let outcome = commands::cmd_train(&config, resumed.as_ref())?;
            for s in &outcome.epochs_run {
                eprintln!("epoch {} mean_loss {} wall_seconds {:.3}", s.epoch, s.mean_loss, s.wall_seconds);
            }
            Ok(())
        }
        Command::Sample(args) => {
            let ck = Checkpoint::load(&args.checkpoint)?;
            commands::cmd_sample(&ck, args.count, args.seed, args.label, args.trajectory, &args.output_dir)?;
            Ok(())
        }
        Command::Eval(args) => {
            let ck = Checkpoint::load(&args.checkpoint)?;
            let rows = commands::cmd_eval(&ck, args.data_dir.as_deref(), args.per_class, args.seed)?;
            emit(args.output.as_deref(), &commands::eval_csv(&rows))
        }
        Command::ParamsCompare(args) => {
            let csv = commands::cmd_params_compare(&args.n, args.depth)?;
            emit(args.output.as_deref(), &csv)
        }
    }
}
