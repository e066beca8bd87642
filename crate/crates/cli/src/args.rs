//! Flag groups reused across subcommands.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use splogsum::{FitOptions, LabelMapping, PenaltyKind};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// Input CSV; gzip-compressed when the name ends in `.gz`.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Label value read as class 1 (every other value is class 0). Without
    /// it labels must be 0 or 1.
    #[arg(long)]
    pub positive_label: Option<String>,
}

impl DataArgs {
    pub fn input(&self) -> Result<&PathBuf, CliError> {
        self.input.as_ref().ok_or_else(|| CliError::Config("--input is required".into()))
    }

    pub fn mapping(&self) -> LabelMapping {
        self.positive_label.clone().map(LabelMapping::Positive).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    /// l1, half or logsum.
    #[arg(long)]
    pub penalty: Option<String>,
    /// Logsum ε; defaults to 0.01·√λ.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Number of λ values tried by cross-validation.
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub max_inner: Option<usize>,
}

impl SolverArgs {
    pub fn kind(&self) -> Result<PenaltyKind, CliError> {
        self.penalty.as_deref().unwrap_or("logsum").parse().map_err(CliError::config)
    }

    pub fn fit_options(&self) -> Result<FitOptions, CliError> {
        let d = FitOptions::default();
        let opts = FitOptions {
            tol: self.tol.unwrap_or(d.tol),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            max_inner: self.max_inner.unwrap_or(d.max_inner),
        };
        if !(opts.tol.is_finite() && opts.tol > 0.0) || opts.max_outer == 0 || opts.max_inner == 0 {
            return Err(CliError::Config("tol, max-outer and max-inner must be positive".into()));
        }
        Ok(opts)
    }

    pub fn grid_size(&self) -> Result<usize, CliError> {
        match self.grid_size.unwrap_or(20) {
            g if g >= 2 => Ok(g),
            g => Err(CliError::Config(format!("grid-size must be at least 2, got {g}"))),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SplArgs {
    /// Wrap the fit in the self-paced sample-selection loop.
    #[arg(long)]
    #[serde(default)]
    pub spl: bool,
    /// Initial age; defaults to just above the median initial loss.
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// Age growth per step.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub max_ages: Option<usize>,
}
