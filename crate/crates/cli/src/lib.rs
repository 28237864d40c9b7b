//! Experiment front end: JSON configs, the CSLR1 grid format, and the `gen`,
//! `recover`, `bench` and `compare` commands.

// Config checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod format;
pub mod number;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "cslr", version, about = "Structured low-rank recovery experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (JSON) or a manifest written by an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Base seed; replaces the config's seed and seed list.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate ground truth, mask and measurements.
    Gen,
    /// Run the configured solver.
    Recover,
    /// Run a solver / seed / undersampling sweep.
    Bench,
    /// Compare recovered grids with each other and the ground truth.
    Compare {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        max_diff: Option<f64>,
        #[arg(long)]
        max_nmse: Option<f64>,
    },
}

fn load(cli: &Cli) -> CliResult<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config is required"))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.override_seed(seed);
        config.validate()?;
    }
    Ok(config)
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> CliResult<()> {
    if cli.threads == 0 {
        return Err(CliError::config("--threads must be at least 1"));
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    match &cli.command {
        Command::Gen => commands::gen::run(&load(cli)?, &out),
        Command::Recover => commands::recover::run(&load(cli)?, &out).map(|_| ()),
        Command::Bench => commands::bench::run(&load(cli)?, &out, cli.threads).map(|_| ()),
        Command::Compare {
            files,
            truth,
            max_diff,
            max_nmse,
        } => {
            let tol = commands::compare::Tolerances {
                max_diff: *max_diff,
                max_nmse: *max_nmse,
            };
            commands::compare::run(files, truth.as_deref(), &tol, cli.out.as_deref()).map(|_| ())
        }
    }
}
