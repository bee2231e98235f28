//! `seesaw`: train, replay and inspect pixel agents.

mod commands;
mod error;
mod plot;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "seesaw", version, about = "Coevolve NEAT controllers and self-attention patch selectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run stage 1 (and stage 2 unless --stage1-only) and write ledger, model, checkpoints and plots.
    Train {
        /// Run configuration (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Root seed, overriding the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: runs/seed-<seed>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from a checkpoint file; the run configuration is taken from it.
        #[arg(long, conflicts_with_all = ["config", "seed", "trials"])]
        resume: Option<PathBuf>,
        /// Skip stage-2 weight tuning.
        #[arg(long)]
        stage1_only: bool,
        /// Episodes per fitness evaluation, overriding the configuration.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Replay a trained model and report the mean and standard deviation of its score.
    Play {
        model: PathBuf,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Play every episode with the same seed.
        #[arg(long)]
        repeat_seed: bool,
        /// Write the frames of the first episode, with selected patches outlined, as PPM images.
        #[arg(long)]
        dump_frames: Option<PathBuf>,
    },
    /// Draw fitness curves from one or more ledgers as SVG.
    Plot {
        #[arg(required = true)]
        ledgers: Vec<PathBuf>,
        /// Directory for the images [default: the first ledger's directory].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the learnable parameters of a model.
    CountParams { model: PathBuf },
    /// Check that an external environment program speaks the line protocol.
    EnvCheck {
        /// Seconds to wait for each reply.
        #[arg(long, default_value_t = 10.0)]
        timeout: f64,
        /// Program and arguments.
        #[arg(required = true, last = true)]
        command: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { config, seed, out, resume, stage1_only, trials } => {
            commands::train(commands::TrainArgs { config, seed, out, resume, stage1_only, trials })
        }
        Command::Play { model, episodes, seed, repeat_seed, dump_frames } => {
            commands::play(&model, episodes, seed, repeat_seed, dump_frames.as_deref())
        }
        Command::Plot { ledgers, out } => commands::plot(&ledgers, out.as_deref()),
        Command::CountParams { model } => commands::count_params(&model),
        Command::EnvCheck { timeout, command } => commands::env_check(command, timeout),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
