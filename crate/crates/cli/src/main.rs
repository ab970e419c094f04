//! `rivw`: winner's-curse-free Mendelian randomization from the command line.

mod commands;
mod exit;
mod manifest;
mod overlay;
mod tsv;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Worker threads for parallel Monte Carlo; defaults to all cores.
const THREADS_ENV: &str = "RIVW_THREADS";

#[derive(Parser)]
#[command(name = "rivw", version, about = "Rerandomized IVW Mendelian randomization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a causal effect from exposure and outcome GWAS summary statistics
    Analyze(commands::analyze::Args),
    /// Run a Monte Carlo study, or write a synthetic GWAS fixture
    Simulate(commands::simulate::Args),
    /// Winner's-curse bias profile over a grid of effect sizes and proportions
    Profile(commands::profile::Args),
    /// Monte Carlo behaviour of the Rao-Blackwellized estimate after selection
    RbCheck(commands::rb_check::Args),
    /// Compare the closed-form conditional variance with Monte Carlo
    Oracle(commands::oracle::Args),
    /// Re-run a command from the manifest.json it wrote
    Replay(commands::replay::Args),
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| rivw_core::Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Analyze(a) => commands::analyze::run(a),
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Profile(a) => commands::profile::run(a),
        Command::RbCheck(a) => commands::rb_check::run(a),
        Command::Oracle(a) => commands::oracle::run(a),
        Command::Replay(a) => commands::replay::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit::code_for(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
