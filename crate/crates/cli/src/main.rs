//! `shapreg`: simulate data, run cross-fitted Shapley regression, sweep sample
//! sizes and fit learning curves.

mod bundle;
mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Overrides;

#[derive(Debug, Parser)]
#[command(
    name = "shapreg",
    version,
    about = "Statistical inference on machine-learning models via Shapley regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a dataset from the randomised-experiment simulation.
    Simulate(Overrides),
    /// Cross-fit, decompose, regress and aggregate; writes a report bundle.
    Run(Overrides),
    /// Repeat the run over ascending sample sizes.
    Sweep(Overrides),
    /// Fit a learning curve and its convergence rate only.
    Curve(Overrides),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(o) => commands::simulate(o),
        Command::Run(o) => commands::run(o),
        Command::Sweep(o) => commands::sweep(o),
        Command::Curve(o) => commands::curve(o),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.stage.exit_code() as u8)
        }
    }
}
