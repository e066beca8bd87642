//! `fit`, `cv` and `eval`.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use splogsum::metrics::DEFAULT_CUTOFF;
use splogsum::seeding::derive_seed;
use splogsum::spl::{DEFAULT_MAX_AGES, DEFAULT_MU};
use splogsum::{
    confusion_report, cross_validate, descriptor_pvalues, fit, fit_chosen, load_csv, spl_fit_from, split, CvOptions,
    CvResult, Dataset, DescriptorReport, DropReport, Gamma0, PenaltySpec, SplConfig,
};

use crate::args::{DataArgs, SolverArgs, SplArgs};
use crate::config::Common;
use crate::error::CliError;
use crate::model::{create, write_json, write_metrics, ModelFile, SplSummary};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub spl: SplArgs,
    /// Fit once at this λ instead of cross-validating.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Cross-validation folds (default 10 when --lambda is absent).
    #[arg(long)]
    pub cv: Option<usize>,
    /// Hold out this fraction of rows (stratified) and report test metrics.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct CvArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    /// Number of folds.
    #[arg(long)]
    pub cv: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Model JSON written by `fit`.
    #[arg(long, short)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn load(data: &DataArgs, common: &Common) -> Result<Dataset, CliError> {
    Ok(load_csv(data.input()?, common.label(), &data.mapping())?)
}

fn cv_options(solver: &SolverArgs, folds: Option<usize>, seed: u64) -> Result<CvOptions, CliError> {
    Ok(CvOptions {
        folds: folds.unwrap_or(10),
        grid_size: solver.grid_size()?,
        seed: derive_seed(seed, &[2]),
        epsilon: solver.epsilon,
        fit: solver.fit_options()?,
    })
}

fn write_cv(common: &Common, cv: &CvResult) -> Result<(), CliError> {
    write_json(&common.output_path("cv.json")?, cv)?;
    let path = common.output_path("cv_curve.csv")?;
    let mut w = csv::Writer::from_writer(create(&path)?);
    let fail = |e: csv::Error| CliError::output(&path, e);
    w.write_record(["lambda", "mean_cv_deviance"]).map_err(fail)?;
    for (l, dev) in cv.lambda_grid.iter().zip(&cv.mean_cv_deviance) {
        w.write_record([l.to_string(), dev.to_string()]).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::output(&path, e))
}

fn write_drops(common: &Common, drops: &DropReport) -> Result<(), CliError> {
    if !common.quiet && !drops.dropped.is_empty() {
        eprintln!("dropped {} constant descriptor(s)", drops.dropped.len());
    }
    write_json(&common.output_path("drop_report.json")?, drops)
}

pub fn run_fit(args: &FitArgs) -> Result<(), CliError> {
    let common = &args.common;
    let seed = common.seed.unwrap_or(0);
    let kind = args.solver.kind()?;
    let opts = args.solver.fit_options()?;
    if args.lambda.is_some() && args.cv.is_some() {
        return Err(CliError::Config("give either --lambda or --cv, not both".into()));
    }
    let raw = load(&args.data, common)?;
    let (train, test) = match args.test_fraction {
        Some(fraction) => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(CliError::Config(format!("test-fraction must lie strictly between 0 and 1, got {fraction}")));
            }
            let pair = split(&raw, 1.0 - fraction, derive_seed(seed, &[1]))?;
            (pair.train, Some(pair.test))
        }
        None => (raw, None),
    };
    let (train, drops) = train.standardize()?;
    let test = test.map(|t| t.standardize_like(&train)).transpose()?;
    write_drops(common, &drops)?;

    let base = match args.lambda {
        Some(lambda) => fit(&train, PenaltySpec::new(kind, lambda, args.solver.epsilon)?, &opts)?,
        None => {
            let cv = cross_validate(&train, kind, &cv_options(&args.solver, args.cv, seed)?)?;
            if !common.quiet {
                println!("chosen lambda = {}", cv.chosen_lambda);
            }
            write_cv(common, &cv)?;
            fit_chosen(&train, &cv, args.solver.epsilon, &opts)?
        }
    };

    let (model, spl) = if args.spl.spl {
        let cfg = SplConfig {
            gamma0: args.spl.gamma0.map_or(Gamma0::Auto, Gamma0::Value),
            mu: args.spl.mu.unwrap_or(DEFAULT_MU),
            max_ages: args.spl.max_ages.unwrap_or(DEFAULT_MAX_AGES),
            fit: opts,
            spec: base.spec,
        };
        let (model, state) = spl_fit_from(&train, &cfg, Some(&base))?;
        let path = common.output_path("spl_history.csv")?;
        state.write_history_csv(create(&path)?)?;
        let summary = SplSummary {
            mu: cfg.mu,
            final_gamma: state.gamma,
            ages: state.age_index,
            selected_samples: state.v.iter().filter(|&&v| v).count(),
            training_samples: train.n(),
        };
        (model, Some(summary))
    } else {
        (base, None)
    };

    let file = ModelFile::new(&model, &train, seed, spl);
    write_json(&common.output_path("model.json")?, &file)?;

    let labels = |d: &Dataset| d.y().to_vec();
    let mut rows = vec![("train", confusion_report(&model.predict_dataset(&train), &labels(&train), DEFAULT_CUTOFF)?)];
    if let Some(test) = &test {
        rows.push(("test", confusion_report(&model.predict_dataset(test), &labels(test), DEFAULT_CUTOFF)?));
    }
    write_metrics(&common.output_path("metrics.csv")?, &rows)?;

    let report = if model.support.is_empty() {
        DescriptorReport::default()
    } else {
        descriptor_pvalues(&train, &model.beta, &model.support, None)?
    };
    let path = common.output_path("descriptors.csv")?;
    report.write_csv(create(&path)?)?;

    if !common.quiet {
        println!(
            "{} at lambda {}: {} of {} descriptors selected; train AUC {:.4}",
            model.spec.kind(),
            model.spec.lambda(),
            model.support.len(),
            train.p(),
            rows[0].1.auc
        );
        if let Some((_, r)) = rows.get(1) {
            println!("test AUC {:.4}, accuracy {:.4}", r.auc, r.accuracy);
        }
    }
    Ok(())
}

pub fn run_cv(args: &CvArgs) -> Result<(), CliError> {
    let common = &args.common;
    let kind = args.solver.kind()?;
    let (train, drops) = load(&args.data, common)?.standardize()?;
    write_drops(common, &drops)?;
    let cv = cross_validate(&train, kind, &cv_options(&args.solver, args.cv, common.seed.unwrap_or(0))?)?;
    write_cv(common, &cv)?;
    if !common.quiet {
        println!("chosen lambda = {}", cv.chosen_lambda);
    }
    Ok(())
}

pub fn run_eval(args: &EvalArgs) -> Result<(), CliError> {
    let common = &args.common;
    let path = args.model.as_ref().ok_or_else(|| CliError::Config("--model is required".into()))?;
    let model = ModelFile::read(path)?;
    let label = common.label.clone().unwrap_or_else(|| model.label.clone());
    let d = load_csv(args.data.input()?, &label, &args.data.mapping())?;
    let probs = model.predict_raw(&d)?;

    let out = common.output_path("predictions.csv")?;
    let mut w = csv::Writer::from_writer(create(&out)?);
    let fail = |e: csv::Error| CliError::output(&out, e);
    w.write_record(["row", "label", "probability"]).map_err(fail)?;
    for (i, p) in probs.iter().enumerate() {
        w.write_record([(i + 1).to_string(), d.y()[i].to_string(), p.to_string()]).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::output(&out, e))?;

    let report = confusion_report(&probs, &d.y().to_vec(), DEFAULT_CUTOFF)?;
    write_metrics(&common.output_path("eval_metrics.csv")?, &[("eval", report.clone())])?;
    if !common.quiet {
        println!("AUC {:.4}, accuracy {:.4} on {} rows", report.auc, report.accuracy, d.n());
    }
    Ok(())
}
