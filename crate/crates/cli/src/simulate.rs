//! `simulate`.

use clap::Args;
use serde::{Deserialize, Serialize};
use splogsum::{generate, save_csv, SimConfig};

use crate::config::Common;
use crate::error::CliError;
use crate::model::write_json;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Samples.
    #[arg(long)]
    pub n: Option<usize>,
    /// Descriptors.
    #[arg(long)]
    pub p: Option<usize>,
    /// Correlation weight of the first descriptor in descriptors 2-5.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Scale of the Gaussian noise added to the linear predictor.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Fraction of labels flipped after sampling.
    #[arg(long)]
    pub label_noise: Option<f64>,
    /// Dataset file name inside the output directory (`.gz` compresses).
    #[arg(long, short)]
    pub output: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// Ground truth written beside a simulated dataset. Positions are 1-based.
#[derive(Debug, Serialize)]
struct Truth<'a> {
    seed: u64,
    n: usize,
    p: usize,
    rho: f64,
    sigma: f64,
    label_noise_fraction: f64,
    beta_true: &'a [f64],
    support: Vec<usize>,
    flipped_rows: Vec<usize>,
}

/// `data.csv.gz` → `data.truth.json`.
fn truth_name(output: &str) -> String {
    let stem = output.strip_suffix(".gz").unwrap_or(output);
    let stem = stem.strip_suffix(".csv").unwrap_or(stem);
    format!("{stem}.truth.json")
}

pub fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let common = &args.common;
    let mut cfg = SimConfig::new(
        args.n.unwrap_or(200),
        args.p.unwrap_or(1000),
        args.rho.unwrap_or(0.2),
        args.sigma.unwrap_or(0.3),
        common.seed.unwrap_or(1),
    );
    cfg.label_noise_fraction = args.label_noise.unwrap_or(0.0);
    let (mut d, truth) = generate(&cfg)?;
    if let Some(label) = &common.label {
        d = d.with_label_name(label.clone());
    }

    let name = args.output.clone().unwrap_or_else(|| "simulated.csv".into());
    let path = common.output_path(&name)?;
    save_csv(&d, &path).map_err(|e| CliError::output(&path, e))?;
    let record = Truth {
        seed: cfg.seed,
        n: cfg.n,
        p: cfg.p,
        rho: cfg.rho,
        sigma: cfg.sigma,
        label_noise_fraction: cfg.label_noise_fraction,
        beta_true: &truth.beta_true,
        support: truth.support_true.iter().map(|j| j + 1).collect(),
        flipped_rows: truth.flipped.iter().map(|i| i + 1).collect(),
    };
    write_json(&common.output_path(&truth_name(&name))?, &record)?;
    if !common.quiet {
        let (neg, pos) = d.class_counts();
        println!("wrote {} ({} rows, {} descriptors, {pos} positive / {neg} negative)", path.display(), d.n(), d.p());
    }
    Ok(())
}
