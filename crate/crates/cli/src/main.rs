//! Batch driver for the multilattice library.
//!
//! Exit status: 0 on success, 2 when the run finished but a theoretical
//! precondition was not met (or a plan left frequencies uncovered), 1 on
//! errors.

mod commands;
mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use config::{Params, Resolved, RunConfig};
use output::Emitter;

#[derive(Parser, Debug)]
#[command(name = "multilattice", version, about = "Multiple rank-1 lattice experiments")]
struct Cli {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Size of the worker pool. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    let text = fs::read_to_string(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    let cfg: RunConfig = serde_json::from_str(&text).context("invalid configuration")?;
    let dir = cli
        .output
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let resolved = Resolved::from_config(cfg, cli.seed)?;
    let out = Emitter::new(&dir, resolved.to_json())?;
    let seed = resolved.seed;
    let outcome = match &resolved.params {
        Params::Cross(p) => commands::cross(p, &out)?,
        Params::Plan(p) => commands::plan(p, seed, &out)?,
        Params::Approximate(p) => commands::approximate(p, seed, &out)?,
        Params::Converge(p) => commands::converge(p, seed, &out)?,
        Params::Lowerbound(p) => commands::lowerbound(p, seed, &out)?,
        Params::TractCheck(p) => commands::tract_check(p, &out)?,
    };
    println!("config_hash {}", out.hash());
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    Ok(outcome.warnings.is_empty())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
