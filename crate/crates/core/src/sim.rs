//! Correlated simulation design and coefficient-support recovery scores.
//!
//! Descriptors are i.i.d. standard normal, except that descriptors 2 to 5
//! are mixed with descriptor 1 as `ρ·x_i1 + (1−ρ)·x_ij`. The first ten true
//! coefficients are nonzero; labels are Bernoulli draws through the logistic
//! link of `Xβ + σε`.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{self, DataError, Dataset};
use crate::metrics::{self, DEFAULT_CUTOFF};
use crate::penalties::{PenaltyKind, PenaltySpec};
use crate::seeding;
use crate::solver::{self, CvOptions, CvResult, ModelFit};
use crate::spl::{self, Gamma0, SplConfig};

/// Coefficients with magnitude at or below this count as zero.
pub const NONZERO_TOL: f64 = 1e-8;

/// Leading nonzero coefficients of the true model.
pub const TRUE_LEADING: [f64; 10] = [1.0, -1.0, -1.5, -3.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0];

#[derive(Debug, Error)]
pub enum SimError {
    #[error("n must be at least 20, got {0}")]
    TooFewSamples(usize),
    #[error("p must be at least 10, got {0}")]
    TooFewFeatures(usize),
    #[error("rho must lie in [0, 1), got {0}")]
    BadRho(f64),
    #[error("sigma must be finite and nonnegative, got {0}")]
    BadSigma(f64),
    #[error("label noise fraction must lie in [0, 0.5), got {0}")]
    BadNoise(f64),
    #[error("coefficient vector has length {found}, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("nothing to run: empty cell grid or method list")]
    EmptyPlan,
    #[error("unknown method `{0}` (expected l1, half, logsum or spl-logsum)")]
    UnknownMethod(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub sigma: f64,
    pub seed: u64,
    #[serde(default)]
    pub label_noise_fraction: f64,
}

impl SimConfig {
    pub fn new(n: usize, p: usize, rho: f64, sigma: f64, seed: u64) -> Self {
        Self { n, p, rho, sigma, seed, label_noise_fraction: 0.0 }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n < 20 {
            return Err(SimError::TooFewSamples(self.n));
        }
        if self.p < 10 {
            return Err(SimError::TooFewFeatures(self.p));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(SimError::BadRho(self.rho));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(SimError::BadSigma(self.sigma));
        }
        if !(0.0..0.5).contains(&self.label_noise_fraction) {
            return Err(SimError::BadNoise(self.label_noise_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub beta_true: Vec<f64>,
    /// 0-based positions of the nonzero coefficients.
    pub support_true: Vec<usize>,
    /// Rows whose label was flipped after sampling.
    pub flipped: Vec<usize>,
}

impl TrueModel {
    pub fn new(p: usize) -> Self {
        let mut beta_true = vec![0.0; p];
        beta_true[..TRUE_LEADING.len()].copy_from_slice(&TRUE_LEADING);
        Self { beta_true, support_true: (0..TRUE_LEADING.len()).collect(), flipped: Vec::new() }
    }
}

/// Column names used for simulated descriptors: `x1`, `x2`, ...
pub fn column_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

pub fn generate(cfg: &SimConfig) -> Result<(Dataset, TrueModel), SimError> {
    cfg.validate()?;
    let SimConfig { n, p, rho, sigma, .. } = *cfg;
    let mut rng = seeding::rng(cfg.seed);
    let mut x = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
    for mut row in x.rows_mut() {
        let first = row[0];
        for j in 1..5 {
            row[j] = rho * first + (1.0 - rho) * row[j];
        }
    }

    let mut truth = TrueModel::new(p);
    let mut y: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|row| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let eta = TRUE_LEADING.iter().zip(row).map(|(b, x)| b * x).sum::<f64>() + sigma * noise;
            if rng.random::<f64>() < solver::sigmoid(eta) { 1.0 } else { 0.0 }
        })
        .collect();

    let flips = (cfg.label_noise_fraction * n as f64).round() as usize;
    if flips > 0 {
        let mut flipped = rand::seq::index::sample(&mut rng, n, flips).into_vec();
        flipped.sort_unstable();
        for &i in &flipped {
            y[i] = 1.0 - y[i];
        }
        truth.flipped = flipped;
    }

    let d = Dataset::new(x, y, column_names(p))?.with_label_name("label");
    Ok((d, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub sensitivity: f64,
    pub specificity: f64,
}

pub fn support_metrics(beta_hat: &[f64], truth: &TrueModel) -> Result<SupportMetrics, SimError> {
    if beta_hat.len() != truth.beta_true.len() {
        return Err(SimError::Length { expected: truth.beta_true.len(), found: beta_hat.len() });
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&b, &t) in beta_hat.iter().zip(&truth.beta_true) {
        match (b.abs() > NONZERO_TOL, t.abs() > NONZERO_TOL) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |a: usize, b: usize| if a + b == 0 { 1.0 } else { a as f64 / (a + b) as f64 };
    Ok(SupportMetrics { tp, fp, tn, fn_, sensitivity: ratio(tp, fn_), specificity: ratio(tn, fp) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "half")]
    Half,
    #[serde(rename = "logsum")]
    Logsum,
    #[serde(rename = "spl-logsum")]
    SplLogsum,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::L1, Method::Half, Method::Logsum, Method::SplLogsum];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::L1 => "l1",
            Method::Half => "half",
            Method::Logsum => "logsum",
            Method::SplLogsum => "spl-logsum",
        }
    }

    /// Penalty whose cross-validated λ the method uses.
    pub fn penalty(self) -> PenaltyKind {
        match self {
            Method::L1 => PenaltyKind::L1,
            Method::Half => PenaltyKind::Half,
            Method::Logsum | Method::SplLogsum => PenaltyKind::Logsum,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "spl-logsum" | "spl_logsum" | "spl" => Ok(Method::SplLogsum),
            other => other
                .parse::<PenaltyKind>()
                .map(|k| match k {
                    PenaltyKind::L1 => Method::L1,
                    PenaltyKind::Half => Method::Half,
                    PenaltyKind::Logsum => Method::Logsum,
                })
                .map_err(|_| SimError::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub rho: f64,
    pub sigma: f64,
}

impl Cell {
    pub fn new(n: usize, rho: f64, sigma: f64) -> Self {
        Self { n, rho, sigma }
    }

    /// The 2×2×2 grid n ∈ {200, 300}, ρ ∈ {0.2, 0.6}, σ ∈ {0.3, 0.9}.
    pub fn default_grid() -> Vec<Cell> {
        let mut cells = Vec::new();
        for n in [200, 300] {
            for rho in [0.2, 0.6] {
                for sigma in [0.3, 0.9] {
                    cells.push(Cell::new(n, rho, sigma));
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationPlan {
    pub cells: Vec<Cell>,
    pub p: usize,
    pub methods: Vec<Method>,
    pub replications: usize,
    /// Replicate `r` (0-based) generates data from seed `seed_base + r`.
    pub seed_base: u64,
    pub train_fraction: f64,
    /// `seed` is replaced per replicate.
    pub cv: CvOptions,
    pub spl_gamma0: Gamma0,
    pub spl_mu: f64,
    pub spl_max_ages: usize,
}

impl Default for ReplicationPlan {
    fn default() -> Self {
        Self {
            cells: Cell::default_grid(),
            p: 1000,
            methods: Method::ALL.to_vec(),
            replications: 10,
            seed_base: 1,
            train_fraction: 0.7,
            cv: CvOptions::default(),
            spl_gamma0: Gamma0::Auto,
            spl_mu: spl::DEFAULT_MU,
            spl_max_ages: spl::DEFAULT_MAX_AGES,
        }
    }
}

/// Seeds used by one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateSeeds {
    pub data: u64,
    pub split: u64,
    pub cv: u64,
}

impl ReplicateSeeds {
    pub fn new(seed_base: u64, rep: usize) -> Self {
        let data = seed_base.wrapping_add(rep as u64);
        Self { data, split: seeding::derive_seed(data, &[1]), cv: seeding::derive_seed(data, &[2]) }
    }
}

/// One method on one replicate of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: Cell,
    pub method: Method,
    pub rep: usize,
    pub seeds: ReplicateSeeds,
    pub outcome: Result<RunScores, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunScores {
    pub lambda: f64,
    pub selected: usize,
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub beta_sensitivity: f64,
    pub beta_specificity: f64,
}

/// Means over the successful replicates of one (cell, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub method: Method,
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub beta_sensitivity: f64,
    pub beta_specificity: f64,
    pub mean_selected: f64,
    pub replications: usize,
    pub seed_base: u64,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicatedResults {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<CellSummary>,
}

impl ReplicatedResults {
    pub fn summary(&self, cell: Cell, method: Method) -> Option<&CellSummary> {
        self.summaries.iter().find(|s| s.cell == cell && s.method == method)
    }

    /// `n,rho,sigma,method,auc,sens,spec,acc,beta_sens,beta_spec,replications,seed_base,errors`.
    pub fn write_table_csv<W: Write>(&self, sink: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "n", "rho", "sigma", "method", "auc", "sens", "spec", "acc", "beta_sens", "beta_spec", "replications",
            "seed_base", "errors",
        ])?;
        for s in &self.summaries {
            w.write_record([
                s.cell.n.to_string(),
                s.cell.rho.to_string(),
                s.cell.sigma.to_string(),
                s.method.to_string(),
                s.auc.to_string(),
                s.sensitivity.to_string(),
                s.specificity.to_string(),
                s.accuracy.to_string(),
                s.beta_sensitivity.to_string(),
                s.beta_specificity.to_string(),
                s.replications.to_string(),
                s.seed_base.to_string(),
                s.errors.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `n,rho,sigma,method,mean_selected,replications`.
    pub fn write_counts_csv<W: Write>(&self, sink: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["n", "rho", "sigma", "method", "mean_selected", "replications"])?;
        for s in &self.summaries {
            w.write_record([
                s.cell.n.to_string(),
                s.cell.rho.to_string(),
                s.cell.sigma.to_string(),
                s.method.to_string(),
                s.mean_selected.to_string(),
                (s.replications - s.errors).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per (cell, method, replicate); failed runs carry the error text.
    pub fn write_records_csv<W: Write>(&self, sink: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "n", "rho", "sigma", "method", "rep", "seed", "lambda", "selected", "auc", "sens", "spec", "acc",
            "beta_sens", "beta_spec", "error",
        ])?;
        for r in &self.records {
            let mut row = vec![
                r.cell.n.to_string(),
                r.cell.rho.to_string(),
                r.cell.sigma.to_string(),
                r.method.to_string(),
                r.rep.to_string(),
                r.seeds.data.to_string(),
            ];
            match &r.outcome {
                Ok(s) => {
                    row.extend(
                        [s.lambda, s.selected as f64, s.auc, s.sensitivity, s.specificity, s.accuracy]
                            .iter()
                            .chain(&[s.beta_sensitivity, s.beta_specificity])
                            .map(f64::to_string),
                    );
                    row.push(String::new());
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), 8));
                    row.push(e.clone());
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Coefficients of a fit on a (possibly column-reduced) dataset, placed at
/// their positions among `names`.
fn full_beta(fit: &ModelFit, fitted_names: &[String], names: &[String]) -> Vec<f64> {
    let position: HashMap<&str, usize> = names.iter().enumerate().map(|(j, n)| (n.as_str(), j)).collect();
    let mut beta = vec![0.0; names.len()];
    for (b, name) in fit.beta.iter().zip(fitted_names) {
        beta[position[name.as_str()]] = *b;
    }
    beta
}

fn score(fit: &ModelFit, train: &Dataset, test: &Dataset, names: &[String], truth: &TrueModel) -> Result<RunScores, String> {
    let probs = fit.predict_dataset(test);
    let report = metrics::confusion_report(&probs, test.y().as_slice().expect("contiguous labels"), DEFAULT_CUTOFF)
        .map_err(|e| e.to_string())?;
    let beta = full_beta(fit, train.names(), names);
    let support = support_metrics(&beta, truth).map_err(|e| e.to_string())?;
    Ok(RunScores {
        lambda: fit.spec.lambda(),
        selected: support.tp + support.fp,
        auc: report.auc,
        sensitivity: report.sensitivity,
        specificity: report.specificity,
        accuracy: report.accuracy,
        beta_sensitivity: support.sensitivity,
        beta_specificity: support.specificity,
    })
}

/// All requested methods on one replicate of one cell.
///
/// Each penalty gets its own cross-validated λ; the self-paced method reuses
/// the Logsum choice and starts from the Logsum fit.
pub fn run_replicate(plan: &ReplicationPlan, cell: Cell, rep: usize) -> Vec<RunRecord> {
    let seeds = ReplicateSeeds::new(plan.seed_base, rep);
    let record = |method, outcome| RunRecord { cell, method, rep, seeds, outcome };
    let sim = SimConfig::new(cell.n, plan.p, cell.rho, cell.sigma, seeds.data);
    let prepared = generate(&sim).and_then(|(d, truth)| {
        let pair = data::split(&d, plan.train_fraction, seeds.split)?;
        let (train, _) = pair.train.standardize()?;
        let test = pair.test.standardize_like(&train)?;
        Ok((d.names().to_vec(), truth, train, test))
    });
    let (names, truth, train, test) = match prepared {
        Ok(v) => v,
        Err(e) => return plan.methods.iter().map(|&m| record(m, Err(e.to_string()))).collect(),
    };

    let cv_opts = CvOptions { seed: seeds.cv, ..plan.cv };
    let mut tuned: HashMap<PenaltyKind, Result<(CvResult, ModelFit), String>> = HashMap::new();
    let mut tune = |kind: PenaltyKind| -> Result<(CvResult, ModelFit), String> {
        tuned
            .entry(kind)
            .or_insert_with(|| {
                let cv = solver::cross_validate(&train, kind, &cv_opts).map_err(|e| e.to_string())?;
                let fit = solver::fit_chosen(&train, &cv, plan.cv.epsilon, &plan.cv.fit).map_err(|e| e.to_string())?;
                Ok((cv, fit))
            })
            .clone()
    };

    plan.methods
        .iter()
        .map(|&method| {
            let outcome = tune(method.penalty()).and_then(|(_, fit)| match method {
                Method::SplLogsum => {
                    let spec = PenaltySpec::new(PenaltyKind::Logsum, fit.spec.lambda(), plan.cv.epsilon)
                        .map_err(|e| e.to_string())?;
                    let cfg = SplConfig {
                        gamma0: plan.spl_gamma0,
                        mu: plan.spl_mu,
                        max_ages: plan.spl_max_ages,
                        fit: plan.cv.fit,
                        spec,
                    };
                    let (spl_fit, _) = spl::spl_fit_from(&train, &cfg, Some(&fit)).map_err(|e| e.to_string())?;
                    score(&spl_fit, &train, &test, &names, &truth)
                }
                _ => score(&fit, &train, &test, &names, &truth),
            });
            record(method, outcome)
        })
        .collect()
}

/// Every (cell, replicate) of the plan, run concurrently, then averaged per
/// (cell, method). Failed runs are counted in `errors` and excluded from the
/// means.
pub fn run_replicated(plan: &ReplicationPlan) -> Result<ReplicatedResults, SimError> {
    if plan.replications == 0 {
        return Err(SimError::NoReplications);
    }
    if plan.cells.is_empty() || plan.methods.is_empty() {
        return Err(SimError::EmptyPlan);
    }
    for cell in &plan.cells {
        SimConfig::new(cell.n, plan.p, cell.rho, cell.sigma, plan.seed_base).validate()?;
    }

    let jobs: Vec<(Cell, usize)> =
        plan.cells.iter().flat_map(|&c| (0..plan.replications).map(move |r| (c, r))).collect();
    let records: Vec<RunRecord> =
        jobs.into_par_iter().map(|(cell, rep)| run_replicate(plan, cell, rep)).collect::<Vec<_>>().concat();

    let mut summaries = Vec::new();
    for &cell in &plan.cells {
        for &method in &plan.methods {
            let runs: Vec<&RunRecord> = records.iter().filter(|r| r.cell == cell && r.method == method).collect();
            let ok: Vec<&RunScores> = runs.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let mean = |f: fn(&RunScores) -> f64| {
                if ok.is_empty() { f64::NAN } else { ok.iter().map(|s| f(s)).sum::<f64>() / ok.len() as f64 }
            };
            summaries.push(CellSummary {
                cell,
                method,
                auc: mean(|s| s.auc),
                sensitivity: mean(|s| s.sensitivity),
                specificity: mean(|s| s.specificity),
                accuracy: mean(|s| s.accuracy),
                beta_sensitivity: mean(|s| s.beta_sensitivity),
                beta_specificity: mean(|s| s.beta_specificity),
                mean_selected: mean(|s| s.selected as f64),
                replications: plan.replications,
                seed_base: plan.seed_base,
                errors: runs.len() - ok.len(),
            });
        }
    }
    Ok(ReplicatedResults { records, summaries })
}
