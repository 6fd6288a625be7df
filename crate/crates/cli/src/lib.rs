//! Batch front-end for estimating the correlated asset/exchange-rate model
//! and pricing quanto options from the posterior.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;

use config::{parse_families, Config};

/// A problem with the configuration or the input files (exit code 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Debug, Parser)]
#[command(name = "quanto", version, about = "Bayesian estimation and pricing of quanto options")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of ttn,tnn,ign,mnc,mle.
    #[arg(long)]
    pub families: Option<String>,
    /// Monte Carlo paths per option.
    #[arg(long)]
    pub paths: Option<usize>,
    /// static or sequential.
    #[arg(long)]
    pub mode: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Posterior summaries per candidate family, plus draws files.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Exchange-rate label from the config (default: the first).
        #[arg(long)]
        fx: Option<String>,
    },
    /// Price the option chain with an existing draws file.
    Price {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fx: Option<String>,
        /// Draws file (default: <out>/draws_ign.csv).
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// Full grid over exchange rates, sample sizes and families.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
    /// Chain summary for an existing draws file.
    Diagnose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        draws: PathBuf,
    },
}

fn resolve_config(common: &Common) -> Result<Config, Invalid> {
    let mut cfg = Config::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(f) = &common.families {
        cfg.families = parse_families(f)?;
    }
    if let Some(p) = common.paths {
        cfg.n_paths = p;
    }
    if let Some(m) = &common.mode {
        cfg.mode = m.parse()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand; returns the files written.
pub fn run(cli: &Cli) -> anyhow::Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Estimate { common, fx } => commands::estimate(&resolve_config(common)?, fx.as_deref()),
        Command::Price { common, fx, draws } => {
            let cfg = resolve_config(common)?;
            let draws = draws.clone().unwrap_or_else(|| cfg.out.join("draws_ign.csv"));
            commands::price(&cfg, fx.as_deref(), &draws)
        }
        Command::Experiment { common } => commands::experiment(&resolve_config(common)?),
        Command::Diagnose { common, draws } => {
            let (files, summary) = commands::diagnose(&resolve_config(common)?, draws)?;
            print!("{summary}");
            Ok(files)
        }
    }
}

/// 1 for validation errors anywhere in the chain, 2 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.downcast_ref::<Invalid>().is_some()) {
        1
    } else {
        2
    }
}
