//! `stable-predict`: exhaustive stability and privacy certificates,
//! predictions and experiments.
//!
//! Exit codes: 0 when the checked guarantee holds, 1 when it is violated,
//! 2 on any operational error (bad config, missing file, oversize grid).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{Mode, Sink};

#[derive(Parser)]
#[command(name = "stable-predict", version, about = "Stable and private prediction certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustively certify the stability of a learner.
    CertifyStability {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the JSON report; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively measure the privacy of a learner.
    CertifyPrivacy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict one label from a dataset file.
    Predict {
        #[arg(long)]
        config: PathBuf,
        /// Dataset JSON: {"domain_size": n, "pairs": [[x, y], ...]}.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        point: usize,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of sampled predictions to draw in sampled mode.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep, lower-bound, net-check or amplification experiment.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config trial count.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("STABLE_PREDICT_THREADS") {
        let n: usize = v.parse().with_context(|| format!("STABLE_PREDICT_THREADS={v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    match cli.command {
        Command::CertifyStability { config, out } => commands::certify_stability(&config, &Sink::new(out)?),
        Command::CertifyPrivacy { config, out } => commands::certify_privacy(&config, &Sink::new(out)?),
        Command::Predict { config, data, point, mode, seed, trials, out } => {
            commands::predict(&config, &data, point, mode, seed, trials, &Sink::new(out)?)
        }
        Command::Experiment { config, seed, trials, out } => commands::experiment(&config, seed, trials, &Sink::new(out)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("guarantee violated");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
