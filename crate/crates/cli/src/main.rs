//! `splogsum`: fit sparse logistic models, cross-validate, simulate data
//! and run the replicated benchmark grid.
//!
//! Exit codes: 0 success, 1 every benchmark cell failed, 2 configuration
//! error, 3 data error, 4 solver divergence.

mod args;
mod bench;
mod config;
mod error;
mod fit;
mod model;
mod simulate;

use clap::{Parser, Subcommand};

use crate::config::{resolve, Common};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "splogsum", version, about = "Sparse logistic regression with Logsum, L1/2 and L1 penalties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model (λ fixed or cross-validated), optionally self-paced.
    Fit(fit::FitArgs),
    /// Cross-validate λ only.
    Cv(fit::CvArgs),
    /// Write a simulated dataset and its ground truth.
    Simulate(simulate::SimulateArgs),
    /// Run the replicated simulation grid for every method.
    Bench(bench::BenchArgs),
    /// Apply a saved model to a labelled CSV.
    Eval(fit::EvalArgs),
}

fn setup(common: &Common) -> Result<(), CliError> {
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().map_err(CliError::config)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(a) => {
            let a = resolve(&a, a.common.config.as_deref(), "fit")?;
            setup(&a.common)?;
            fit::run_fit(&a)
        }
        Command::Cv(a) => {
            let a = resolve(&a, a.common.config.as_deref(), "cv")?;
            setup(&a.common)?;
            fit::run_cv(&a)
        }
        Command::Simulate(a) => {
            let a = resolve(&a, a.common.config.as_deref(), "simulate")?;
            setup(&a.common)?;
            simulate::run_simulate(&a)
        }
        Command::Bench(a) => {
            let a = resolve(&a, a.common.config.as_deref(), "bench")?;
            setup(&a.common)?;
            bench::run_bench(&a)
        }
        Command::Eval(a) => {
            let a = resolve(&a, a.common.config.as_deref(), "eval")?;
            setup(&a.common)?;
            fit::run_eval(&a)
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
