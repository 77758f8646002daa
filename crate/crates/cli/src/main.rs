//! `mfbvar`: simulate, estimate, forecast and evaluate mixed-frequency
//! steady-state BVARs.

mod commands;
mod config;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "mfbvar", version, about)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic mixed-frequency panel from a known VAR.
    Simulate,
    /// Run the Gibbs sampler and write posterior draws.
    Estimate,
    /// Simulate the predictive distribution from a draw file.
    Forecast {
        /// Draw file written by `estimate` (default: <output>/draws.jsonl).
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// Recursive real-time forecast evaluation.
    Evaluate,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.output.clone().unwrap_or_else(commands::default_output);
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out)?,
        Command::Estimate => {
            let hash = commands::estimate(&cfg, &out)?;
            println!("manifest sha256 {hash}");
        }
        Command::Forecast { draws } => {
            let draws = draws.unwrap_or_else(|| out.join("draws.jsonl"));
            commands::forecast_cmd(&cfg, &draws, &out)?;
        }
        Command::Evaluate => print!("{}", commands::evaluate(&cfg, &out)?),
    }
    Ok(())
}
