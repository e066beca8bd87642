//! Self-paced learning around the penalized solver.
//!
//! The loop alternates between (a) choosing the samples whose current loss is
//! below the age threshold γ, (b) refitting the model on those samples only,
//! and (c) raising γ by a fixed step μ, so that training admits samples from
//! easy (low loss) to hard.
//!
//! The joint objective at a fixed age is
//!
//! ```text
//! E(β, v; γ) = Σ_i v_i l_i(β) + n·penalty(β) − γ·Σ_i v_i
//! ```
//!
//! i.e. `n` times the solver's working objective minus the self-paced term.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::penalties::PenaltySpec;
use crate::solver::{self, FitOptions, ModelFit, SolverError};

#[derive(Debug, Error)]
pub enum SplError {
    #[error("age step mu must be positive, got {0}")]
    BadStep(f64),
    #[error("max_ages must be at least 1")]
    NoAges,
    #[error("initial age gamma0 must be positive, got {0}")]
    BadGamma(f64),
    #[error("non-finite per-sample loss at sample {0}")]
    NonFiniteLoss(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Initial age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma0 {
    /// Just above the median initial loss, so at least half the samples
    /// start selected.
    Auto,
    Value(f64),
}

pub const DEFAULT_MU: f64 = 0.05;
pub const DEFAULT_MAX_AGES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplConfig {
    pub gamma0: Gamma0,
    pub mu: f64,
    pub max_ages: usize,
    pub fit: FitOptions,
    pub spec: PenaltySpec,
}

impl SplConfig {
    pub fn new(spec: PenaltySpec) -> Self {
        Self { gamma0: Gamma0::Auto, mu: DEFAULT_MU, max_ages: DEFAULT_MAX_AGES, fit: FitOptions::default(), spec }
    }

    fn validate(&self) -> Result<(), SplError> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(SplError::BadStep(self.mu));
        }
        if self.max_ages == 0 {
            return Err(SplError::NoAges);
        }
        if let Gamma0::Value(g) = self.gamma0 {
            if !(g.is_finite() && g > 0.0) {
                return Err(SplError::BadGamma(g));
            }
        }
        Ok(())
    }
}

/// One age of the self-paced loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeRecord {
    /// 1-based.
    pub age_index: usize,
    pub gamma: f64,
    /// Whether γ had to be raised so that both classes were selected.
    pub gamma_expanded: bool,
    pub selected_count: usize,
    pub selected: Vec<usize>,
    pub newly_added: Vec<usize>,
    /// Per-sample losses the selection was made from.
    pub losses: Vec<f64>,
    /// `E(β, v; γ)` before and after the refit of this age.
    pub objective_before: f64,
    pub objective_after: f64,
    pub refitted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplState {
    pub v: Vec<bool>,
    pub gamma: f64,
    /// Per-sample losses of the returned fit.
    pub losses: Vec<f64>,
    pub age_index: usize,
    pub history: Vec<AgeRecord>,
}

impl SplState {
    /// First age at which each sample was selected, `None` if never.
    pub fn entry_ages(&self) -> Vec<Option<usize>> {
        let mut entry = vec![None; self.v.len()];
        for record in &self.history {
            for &i in &record.selected {
                entry[i].get_or_insert(record.age_index);
            }
        }
        entry
    }

    /// `age_index,gamma,selected_count,newly_added_indices`; indices are
    /// 0-based row numbers separated by `;`.
    pub fn write_history_csv<W: Write>(&self, sink: W) -> Result<(), SplError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["age_index", "gamma", "selected_count", "newly_added_indices"])?;
        for r in &self.history {
            let added = r.newly_added.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
            w.write_record([r.age_index.to_string(), r.gamma.to_string(), r.selected_count.to_string(), added])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `v_i = 1` iff `losses_i < gamma`.
pub fn update_weights(losses: &[f64], gamma: f64) -> Vec<bool> {
    losses.iter().map(|&l| l < gamma).collect()
}

fn as_weights(v: &[bool]) -> Vec<f64> {
    v.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect()
}

/// `E(β, v; γ)` for the fit's coefficients.
pub fn spl_objective(fit: &ModelFit, d: &Dataset, v: &[bool], gamma: f64) -> f64 {
    let losses = fit.per_sample_losses(d);
    let selected: f64 = losses.iter().zip(v).filter(|(_, &s)| s).map(|(l, _)| l - gamma).sum();
    selected + d.n() as f64 * fit.spec.value(&fit.beta)
}

/// Smallest γ (strictly above some loss) that selects at least one sample
/// of each class.
fn class_covering_gamma(losses: &[f64], d: &Dataset) -> f64 {
    [0u8, 1]
        .iter()
        .map(|&label| d.class_indices(label).iter().map(|&i| losses[i]).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max)
        .next_up()
}

fn auto_gamma(losses: &[f64]) -> f64 {
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[sorted.len().div_ceil(2) - 1].next_up()
}

fn checked_losses(fit: &ModelFit, d: &Dataset) -> Result<Vec<f64>, SplError> {
    let losses = fit.per_sample_losses(d);
    match losses.iter().position(|l| !l.is_finite()) {
        Some(i) => Err(SplError::NonFiniteLoss(i)),
        None => Ok(losses),
    }
}

/// Runs the self-paced loop and returns the final-age fit with its trace.
///
/// The refit of an age starts from the previous age's coefficients and is
/// kept only if it does not increase `E(β, v; γ)` for the new selection. An
/// age whose selection equals the one the current fit was trained on skips
/// the refit. The loop stops once every sample is selected and the current
/// fit was trained on all of them, or after `max_ages` ages.
pub fn spl_fit(d: &Dataset, cfg: &SplConfig) -> Result<(ModelFit, SplState), SplError> {
    spl_fit_from(d, cfg, None)
}

/// [`spl_fit`] whose all-sample initial fit is warm-started from `init`.
pub fn spl_fit_from(d: &Dataset, cfg: &SplConfig, init: Option<&ModelFit>) -> Result<(ModelFit, SplState), SplError> {
    cfg.validate()?;
    let mut current = solver::fit_weighted(d, cfg.spec, &cfg.fit, None, init)?;
    let mut trained_on = vec![true; d.n()];
    let mut losses = checked_losses(&current, d)?;
    let mut gamma = match cfg.gamma0 {
        Gamma0::Auto => auto_gamma(&losses),
        Gamma0::Value(g) => g,
    };

    let mut history: Vec<AgeRecord> = Vec::new();
    let mut v = Vec::new();
    let mut previous_selection = vec![false; d.n()];
    for age_index in 1..=cfg.max_ages {
        v = update_weights(&losses, gamma);
        let covers = |v: &[bool]| [0.0, 1.0].iter().all(|&c| v.iter().zip(d.y()).any(|(&s, &y)| s && y == c));
        let gamma_expanded = !covers(&v);
        if gamma_expanded {
            gamma = gamma.max(class_covering_gamma(&losses, d));
            v = update_weights(&losses, gamma);
        }

        let objective_before = spl_objective(&current, d, &v, gamma);
        let mut objective_after = objective_before;
        let refitted = v != trained_on;
        if refitted {
            let candidate = solver::fit_weighted(d, cfg.spec, &cfg.fit, Some(&as_weights(&v)), Some(&current))?;
            let candidate_objective = spl_objective(&candidate, d, &v, gamma);
            if candidate_objective <= objective_before {
                current = candidate;
                objective_after = candidate_objective;
            }
            trained_on = v.clone();
        }

        let selected: Vec<usize> = v.iter().enumerate().filter(|(_, &s)| s).map(|(i, _)| i).collect();
        let newly_added = selected.iter().copied().filter(|&i| !previous_selection[i]).collect();
        history.push(AgeRecord {
            age_index,
            gamma,
            gamma_expanded,
            selected_count: selected.len(),
            selected,
            newly_added,
            losses: std::mem::take(&mut losses),
            objective_before,
            objective_after,
            refitted,
        });
        previous_selection.clone_from(&v);
        losses = checked_losses(&current, d)?;

        if trained_on.iter().all(|&s| s) && v.iter().all(|&s| s) {
            break;
        }
        gamma += cfg.mu;
    }

    let age_index = history.len();
    let gamma = history.last().map_or(gamma, |r| r.gamma);
    Ok((current, SplState { v, gamma, losses, age_index, history }))
}

/// Sample counts per loss band: `loss < low` (high confidence),
/// `low ≤ loss < high` (medium) and `loss ≥ high` (low confidence).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceBands {
    pub high: usize,
    pub medium: usize,
    pub low: usize,
}

pub fn confidence_bands(losses: &[f64], low: f64, high: f64) -> ConfidenceBands {
    assert!(low < high, "band edges must be increasing");
    let mut bands = ConfidenceBands { high: 0, medium: 0, low: 0 };
    for &l in losses {
        if l < low {
            bands.high += 1;
        } else if l < high {
            bands.medium += 1;
        } else {
            bands.low += 1;
        }
    }
    bands
}
