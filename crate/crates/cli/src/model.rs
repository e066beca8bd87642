//! Model files and the small CSV reports written next to them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use splogsum::{ClassificationReport, Dataset, ModelFit, PenaltyKind};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    /// On the standardized scale the model was trained on.
    pub value: f64,
    /// On the raw descriptor scale of the input file.
    pub raw_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplSummary {
    pub mu: f64,
    pub final_gamma: f64,
    pub ages: usize,
    pub selected_samples: usize,
    pub training_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub label: String,
    pub penalty: PenaltyKind,
    pub lambda: f64,
    /// Present for Logsum only.
    pub epsilon: Option<f64>,
    pub intercept: f64,
    pub raw_intercept: f64,
    pub coefficients: Vec<Coefficient>,
    pub selected: Vec<String>,
    pub converged: bool,
    pub n_outer_iters: usize,
    pub seed: u64,
    pub spl: Option<SplSummary>,
}

impl ModelFile {
    pub fn new(fit: &ModelFit, train: &Dataset, seed: u64, spl: Option<SplSummary>) -> Self {
        let (raw, raw_intercept) = fit.destandardized(train);
        let coefficients = train
            .names()
            .iter()
            .zip(fit.beta.iter().zip(&raw))
            .map(|(name, (&value, &raw_value))| Coefficient { name: name.clone(), value, raw_value })
            .collect();
        Self {
            label: train.label_name().to_string(),
            penalty: fit.spec.kind(),
            lambda: fit.spec.lambda(),
            epsilon: (fit.spec.kind() == PenaltyKind::Logsum).then(|| fit.spec.epsilon()),
            intercept: fit.intercept,
            raw_intercept,
            coefficients,
            selected: fit.support.iter().map(|&j| train.names()[j].clone()).collect(),
            converged: fit.converged,
            n_outer_iters: fit.n_outer_iters,
            seed,
            spl,
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read model `{}`: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("model `{}`: {e}", path.display())))
    }

    /// Class-1 probabilities for the rows of a raw (unstandardized) dataset.
    pub fn predict_raw(&self, d: &Dataset) -> Result<Vec<f64>, CliError> {
        let columns: Vec<(usize, f64)> = self
            .coefficients
            .iter()
            .filter(|c| c.raw_value != 0.0)
            .map(|c| {
                d.names()
                    .iter()
                    .position(|n| *n == c.name)
                    .map(|j| (j, c.raw_value))
                    .ok_or_else(|| CliError::Data(format!("descriptor `{}` is missing from the input", c.name)))
            })
            .collect::<Result<_, _>>()?;
        Ok((0..d.n())
            .map(|i| {
                let eta = columns.iter().fold(self.raw_intercept, |acc, &(j, b)| acc + b * d.column(j)[i]);
                splogsum::solver::sigmoid(eta)
            })
            .collect())
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::output(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut sink = create(path)?;
    serde_json::to_writer_pretty(&mut sink, value).map_err(|e| CliError::output(path, e))?;
    writeln!(sink).and_then(|_| sink.flush()).map_err(|e| CliError::output(path, e))
}

pub const METRICS_HEADER: [&str; 12] =
    ["split", "n", "n_pos", "n_neg", "auc", "accuracy", "sensitivity", "specificity", "tp", "tn", "fp", "fn"];

pub fn write_metrics(path: &Path, rows: &[(&str, ClassificationReport)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let fail = |e: csv::Error| CliError::output(path, e);
    w.write_record(METRICS_HEADER).map_err(fail)?;
    for (split, r) in rows {
        w.write_record([
            split.to_string(),
            (r.n_pos + r.n_neg).to_string(),
            r.n_pos.to_string(),
            r.n_neg.to_string(),
            r.auc.to_string(),
            r.accuracy.to_string(),
            r.sensitivity.to_string(),
            r.specificity.to_string(),
            r.tp.to_string(),
            r.tn.to_string(),
            r.fp.to_string(),
            r.fn_.to_string(),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}
