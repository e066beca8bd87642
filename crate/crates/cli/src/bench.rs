//! `bench`: the replicated simulation grid.

use clap::Args;
use serde::{Deserialize, Serialize};
use splogsum::{run_replicated, Cell, CvOptions, Gamma0, Method, ReplicatedResults, ReplicationPlan};

use crate::args::SolverArgs;
use crate::config::Common;
use crate::error::CliError;
use crate::model::{create, write_json};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    /// Sample sizes of the grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Correlation levels of the grid.
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
    /// Noise levels of the grid.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// Descriptors per simulated dataset.
    #[arg(long)]
    pub p: Option<usize>,
    /// Any of l1, half, logsum, spl-logsum.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Cross-validation folds.
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub max_ages: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

impl BenchArgs {
    pub fn plan(&self) -> Result<ReplicationPlan, CliError> {
        let d = ReplicationPlan::default();
        let cells = if self.n.is_none() && self.rho.is_none() && self.sigma.is_none() {
            d.cells
        } else {
            let ns = self.n.clone().unwrap_or_else(|| vec![200, 300]);
            let rhos = self.rho.clone().unwrap_or_else(|| vec![0.2, 0.6]);
            let sigmas = self.sigma.clone().unwrap_or_else(|| vec![0.3, 0.9]);
            let mut cells = Vec::new();
            for &n in &ns {
                for &rho in &rhos {
                    for &sigma in &sigmas {
                        cells.push(Cell::new(n, rho, sigma));
                    }
                }
            }
            cells
        };
        let methods = match &self.methods {
            None => d.methods,
            Some(names) => names.iter().map(|m| m.parse::<Method>()).collect::<Result<_, _>>()?,
        };
        if self.solver.penalty.is_some() {
            return Err(CliError::Config("bench runs every method; use --methods instead of --penalty".into()));
        }
        Ok(ReplicationPlan {
            cells,
            p: self.p.unwrap_or(d.p),
            methods,
            replications: self.replications.unwrap_or(d.replications),
            seed_base: self.common.seed.unwrap_or(d.seed_base),
            train_fraction: self.train_fraction.unwrap_or(d.train_fraction),
            cv: CvOptions {
                folds: self.folds.unwrap_or(d.cv.folds),
                grid_size: self.solver.grid_size()?,
                seed: 0,
                epsilon: self.solver.epsilon,
                fit: self.solver.fit_options()?,
            },
            spl_gamma0: self.gamma0.map_or(Gamma0::Auto, Gamma0::Value),
            spl_mu: self.mu.unwrap_or(d.spl_mu),
            spl_max_ages: self.max_ages.unwrap_or(d.spl_max_ages),
        })
    }
}

fn print_summary(results: &ReplicatedResults) {
    println!(
        "{:>5} {:>5} {:>5} {:<10} {:>7} {:>7} {:>7} {:>7} {:>9} {:>9} {:>8} {:>6}",
        "n", "rho", "sigma", "method", "AUC", "sens", "spec", "acc", "beta_sens", "beta_spec", "selected", "errors"
    );
    for s in &results.summaries {
        println!(
            "{:>5} {:>5} {:>5} {:<10} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>9.4} {:>9.4} {:>8.1} {:>6}",
            s.cell.n,
            s.cell.rho,
            s.cell.sigma,
            s.method.as_str(),
            s.auc,
            s.sensitivity,
            s.specificity,
            s.accuracy,
            s.beta_sensitivity,
            s.beta_specificity,
            s.mean_selected,
            s.errors
        );
    }
}

pub fn run_bench(args: &BenchArgs) -> Result<(), CliError> {
    let common = &args.common;
    let plan = args.plan()?;
    if !common.quiet {
        eprintln!(
            "running {} cell(s) x {} replication(s) x {} method(s)",
            plan.cells.len(),
            plan.replications,
            plan.methods.len()
        );
    }
    let results = run_replicated(&plan)?;

    write_json(&common.output_path("bench_plan.json")?, &plan)?;
    let path = common.output_path("bench_table.csv")?;
    results.write_table_csv(create(&path)?).map_err(|e| CliError::output(&path, e))?;
    let path = common.output_path("bench_counts.csv")?;
    results.write_counts_csv(create(&path)?).map_err(|e| CliError::output(&path, e))?;
    let path = common.output_path("bench_runs.csv")?;
    results.write_records_csv(create(&path)?).map_err(|e| CliError::output(&path, e))?;
    if !common.quiet {
        print_summary(&results);
    }

    let failed = results.summaries.iter().filter(|s| s.errors == s.replications).count();
    if failed == results.summaries.len() {
        let first = results.records.iter().find_map(|r| r.outcome.as_ref().err()).cloned().unwrap_or_default();
        return Err(CliError::Failed(format!("every cell failed; first error: {first}")));
    }
    Ok(())
}
