//! `stgrb`: synthetic full-order problems, space-time reduced models and the
//! benchmark campaign from the command line.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{CliError, Context};
use config::{CliConfig, OUTPUT_ENV};
use std::path::PathBuf;
use stgrb_core::par::{self, Execution};

#[derive(Parser)]
#[command(name = "stgrb", version, about = "Space-time reduced bases for fluid-structure interaction")]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads. 1 runs everything sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build or ingest the full-order operators.
    Generate,
    /// Full-order training and test solves.
    Fom,
    /// Bases, reduced operators and warm-start store.
    Offline,
    /// Reduced solves at the test parameters.
    Online,
    /// Tolerance sweep comparing ST-GRB with SRB-TFO.
    Bench,
    /// Invariant self-checks on a fresh instance.
    Validate,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    }
    .with_env(std::env::var(OUTPUT_ENV).ok());
    let exec = match cli.jobs {
        Some(0) => return Err(config::ConfigError("--jobs must be positive".into()).into()),
        Some(1) => Execution::Sequential,
        Some(n) => {
            par::set_threads(n);
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let ctx = Context::new(config, exec)?;
    match cli.command {
        Command::Generate => commands::generate(&ctx),
        Command::Fom => commands::fom(&ctx),
        Command::Offline => commands::offline(&ctx),
        Command::Online => commands::online(&ctx),
        Command::Bench => commands::bench(&ctx),
        Command::Validate => commands::validate(&ctx),
    }
}

fn main() {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
