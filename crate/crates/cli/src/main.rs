//! `tlnn`: synthesise bearing data, extract features, train a temporal
//! logic network, evaluate it and read out its formula.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 IO failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tlnn::signals::Condition;

#[derive(Debug, Parser)]
#[command(name = "tlnn", version, about = "Temporal logic neural network pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; library defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a raw synthetic corpus (faults labelled +1, normal -1).
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        out: PathBuf,
        /// Overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `synth.count`, samples per condition.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Turn raw signals into feature signals, optionally as a one-vs-rest
    /// train/test split.
    Preprocess {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        data: PathBuf,
        /// Features, or the train split when `--target` is given.
        #[arg(long, short)]
        out: PathBuf,
        /// Condition labelled +1; the others become -1.
        #[arg(long, requires = "test_out")]
        target: Option<Condition>,
        #[arg(long, requires = "target")]
        test_out: Option<PathBuf>,
        /// Overrides `seed` for the split.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a network and write its checkpoint and history.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        data: PathBuf,
        /// Checkpoint (JSON).
        #[arg(long, short)]
        out: PathBuf,
        /// History CSV; defaults to the checkpoint path with `.history.csv`.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Overrides `train.seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_neurons: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Error rate and mean robustness of a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, short)]
        data: PathBuf,
        /// Per-sample CSV: `sample,label,robustness,predicted`.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the formula a checkpoint encodes.
    Extract {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Calibration data the interval codes are averaged over.
        #[arg(long, short)]
        data: PathBuf,
        /// Omit all weight annotations.
        #[arg(long)]
        strip_weights: bool,
        /// Display form: no weight annotations, operands weighted below 1e-3
        /// dropped.
        #[arg(long, conflicts_with = "strip_weights")]
        compact: bool,
        /// Write one CSV row per temporal sub-formula.
        #[arg(long)]
        export_regions: Option<PathBuf>,
        /// Write the formula here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
