//! `ifsdf`: train a neural SDF on a point cloud, mesh it and score meshes.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit status for bad arguments, files or configuration.
pub const EXIT_USAGE: u8 = 2;
/// Exit status when training or evaluation fails numerically.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "ifsdf", version, about = "Neural signed distance fields from raw point clouds")]
pub struct Cli {
    /// Random seed (overrides `seed` from the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Single worker thread and fixed reduction order; outputs are byte-identical across runs.
    #[arg(long, global = true)]
    pub deterministic: bool,

    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// `key=value` config file; a manifest from an earlier run also works.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Override one config key, e.g. `--set alpha3=5` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on an .xyz/.ply/.obj point cloud; writes a checkpoint, logs and a manifest.
    Train {
        input: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Extract a mesh (.obj or .ply) from a checkpoint with marching cubes.
    Reconstruct {
        checkpoint: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Level set to extract; small positive values suit open surfaces.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        iso: f64,
        /// Grid nodes per axis.
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        /// Half-width of the cubic grid in normalized coordinates.
        #[arg(long, default_value_t = 0.55)]
        bound: f64,
        /// Keep normalized coordinates instead of applying the `normalization.txt`
        /// found next to the checkpoint.
        #[arg(long)]
        normalized: bool,
    },
    /// Compare a predicted mesh with a reference mesh or point cloud.
    Eval {
        pred: PathBuf,
        /// Reference mesh (.obj/.ply with faces) or points (.xyz/.ply without faces).
        gt: PathBuf,
        /// Points sampled from each mesh.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.01)]
        fscore_threshold: f64,
        /// Also compute the edge Chamfer distance (needs a reference mesh).
        #[arg(long)]
        ecd: bool,
        #[arg(long, default_value_t = 0.01)]
        ecd_epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        ecd_sigma: f64,
        /// Write the key=value report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a CSV header and row.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Train on a 2D curve (x,y per line) and write the field on a grid as CSV.
    Filter2d {
        curve: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// pull, cd, cd+zero, cd+zero+field or full.
        #[arg(long, default_value = "full")]
        loss: String,
        /// Grid nodes per axis.
        #[arg(long, default_value_t = 128)]
        resolution: usize,
        /// Half-width of the square grid in normalized coordinates.
        #[arg(long, default_value_t = 0.6)]
        bound: f64,
        /// Also write the training log here.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
