//! Penalized logistic regression by IRLS with coordinate-descent inner loops.
//!
//! Each outer iteration replaces the weighted negative log-likelihood by its
//! quadratic (IRLS) surrogate around the current coefficients,
//!
//! ```text
//! Q(β₀, β) = 1/(2n) Σ_i v_i W_i (Z_i − β₀ − x_i·β)² + Σ_j λ·g(β_j)
//! ```
//!
//! and minimizes it one coordinate at a time with the exact univariate
//! thresholding operators from [`crate::penalties`]. The working objective is
//! `(1/n)·Σ_i v_i l_i(β) + penalty(β)` where `n` counts every row, including
//! rows whose sample weight is zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::penalties::{stationary_candidate, PenaltyError, PenaltyKind, PenaltySpec};
use crate::seeding;

/// Floor on the probability assigned to the observed class inside log terms.
pub const PROB_FLOOR: f64 = 1e-12;
/// Floor on IRLS weights `f(1 − f)`.
pub const WEIGHT_FLOOR: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("effective sample contains a single class")]
    OneClass,
    #[error("objective became non-finite at outer iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("sample weights must be finite and lie in [0, 1]")]
    BadWeights,
    #[error("need at least 2 folds, got {0}")]
    BadFolds(usize),
    #[error("class {label} has {size} samples, fewer than the {folds} folds")]
    FoldTooSmall { label: u8, size: usize, folds: usize },
    #[error("every fit on the lambda grid failed")]
    NoValidLambda,
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
}

/// Overflow-safe logistic function.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Negative log-likelihood of one sample given its linear score.
pub fn sample_loss(eta: f64, y: f64) -> f64 {
    let loss = if y == 1.0 { softplus(-eta) } else { softplus(eta) };
    loss.min(-PROB_FLOOR.ln())
}

/// `β₀ + x_i·β` for every row.
pub fn linear_scores(beta: &[f64], intercept: f64, d: &Dataset) -> Vec<f64> {
    assert_eq!(beta.len(), d.p(), "coefficient length must match descriptor count");
    let mut eta = vec![intercept; d.n()];
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            eta.iter_mut().zip(d.column(j)).for_each(|(e, &x)| *e += b * x);
        }
    }
    eta
}

pub fn per_sample_losses(beta: &[f64], intercept: f64, d: &Dataset) -> Vec<f64> {
    linear_scores(beta, intercept, d).iter().zip(d.y()).map(|(&e, &y)| sample_loss(e, y)).collect()
}

/// `l(β) = −Σ_i [y_i log f_i + (1 − y_i) log(1 − f_i)]`.
pub fn neg_log_likelihood(beta: &[f64], intercept: f64, d: &Dataset) -> f64 {
    per_sample_losses(beta, intercept, d).iter().sum()
}

/// Gradient of [`neg_log_likelihood`] with respect to `(β₀, β)`.
pub fn nll_gradient(beta: &[f64], intercept: f64, d: &Dataset) -> (f64, Vec<f64>) {
    let resid: Vec<f64> =
        linear_scores(beta, intercept, d).iter().zip(d.y()).map(|(&e, &y)| sigmoid(e) - y).collect();
    let g0 = resid.iter().sum();
    let g = (0..d.p()).map(|j| d.column(j).iter().zip(&resid).map(|(x, r)| x * r).sum()).collect();
    (g0, g)
}

/// IRLS working response and weights at the current coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingSet {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn irls_working_set(beta: &[f64], intercept: f64, d: &Dataset) -> WorkingSet {
    let eta = linear_scores(beta, intercept, d);
    working_set_from_scores(&eta, d)
}

fn working_set_from_scores(eta: &[f64], d: &Dataset) -> WorkingSet {
    let (z, w) = eta
        .iter()
        .zip(d.y())
        .map(|(&e, &y)| {
            let f = sigmoid(e);
            let w = (f * (1.0 - f)).max(WEIGHT_FLOOR);
            (e + (y - f) / w, w)
        })
        .unzip();
    WorkingSet { z, w }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Convergence threshold on the largest absolute coefficient change
    /// (intercept included) across one outer iteration.
    pub tol: f64,
    pub max_outer: usize,
    /// Budget of coordinate sweeps per outer iteration.
    pub max_inner: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-4, max_outer: 50, max_inner: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    /// Coefficients on the standardized scale.
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub spec: PenaltySpec,
    /// Working objective after each outer iteration.
    pub loss_trace: Vec<f64>,
    pub n_outer_iters: usize,
    pub converged: bool,
    /// Sorted indices of the nonzero coefficients.
    pub support: Vec<usize>,
}

impl ModelFit {
    pub fn predict_proba(&self, x_row: &[f64]) -> Result<f64, SolverError> {
        if x_row.len() != self.beta.len() {
            return Err(SolverError::Dimension { expected: self.beta.len(), found: x_row.len() });
        }
        let eta = self.intercept + x_row.iter().zip(&self.beta).map(|(x, b)| x * b).sum::<f64>();
        Ok(sigmoid(eta))
    }

    pub fn predict_dataset(&self, d: &Dataset) -> Vec<f64> {
        linear_scores(&self.beta, self.intercept, d).into_iter().map(sigmoid).collect()
    }

    pub fn per_sample_losses(&self, d: &Dataset) -> Vec<f64> {
        per_sample_losses(&self.beta, self.intercept, d)
    }

    /// Coefficients and intercept on the raw descriptor scale of `d`'s
    /// parent data; identity when `d` is not standardized.
    pub fn destandardized(&self, d: &Dataset) -> (Vec<f64>, f64) {
        match d.standardization() {
            None => (self.beta.clone(), self.intercept),
            Some(s) => {
                let raw: Vec<f64> = self.beta.iter().zip(&s.stds).map(|(b, sd)| b / sd).collect();
                let shift: f64 = raw.iter().zip(&s.means).map(|(b, m)| b * m).sum();
                (raw, self.intercept - shift)
            }
        }
    }
}

fn support_of(beta: &[f64]) -> Vec<usize> {
    beta.iter().enumerate().filter(|(_, &b)| b != 0.0).map(|(j, _)| j).collect()
}

/// The penalized IRLS surrogate around a fixed expansion point, with the
/// residual `Z − η` maintained incrementally.
pub(crate) struct Surrogate<'a> {
    data: &'a Dataset,
    spec: PenaltySpec,
    /// `v_i·W_i`.
    u: Vec<f64>,
    u_sum: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    z: Vec<f64>,
    resid: Vec<f64>,
    curvature: Vec<f64>,
    beta: Vec<f64>,
    intercept: f64,
}

impl<'a> Surrogate<'a> {
    pub(crate) fn new(data: &'a Dataset, spec: PenaltySpec, weights: &[f64], beta: Vec<f64>, intercept: f64) -> Self {
        let eta = linear_scores(&beta, intercept, data);
        let WorkingSet { z, w } = working_set_from_scores(&eta, data);
        let u: Vec<f64> = w.iter().zip(weights).map(|(w, v)| w * v).collect();
        let resid = z.iter().zip(&eta).map(|(z, e)| z - e).collect();
        Self::assemble(data, spec, u, z, resid, beta, intercept)
    }

    /// The same construction with every `W_i` replaced by ¼, the largest
    /// curvature of the logistic loss, so the quadratic bounds the loss from
    /// above everywhere.
    pub(crate) fn majorizer(data: &'a Dataset, spec: PenaltySpec, weights: &[f64], beta: Vec<f64>, intercept: f64) -> Self {
        let eta = linear_scores(&beta, intercept, data);
        let resid: Vec<f64> = eta.iter().zip(data.y()).map(|(&e, &y)| 4.0 * (y - sigmoid(e))).collect();
        let z = resid.iter().zip(&eta).map(|(r, e)| r + e).collect();
        Self::assemble(data, spec, weights.iter().map(|v| 0.25 * v).collect(), z, resid, beta, intercept)
    }

    fn assemble(
        data: &'a Dataset,
        spec: PenaltySpec,
        u: Vec<f64>,
        z: Vec<f64>,
        resid: Vec<f64>,
        beta: Vec<f64>,
        intercept: f64,
    ) -> Self {
        let curvature =
            (0..data.p()).map(|j| data.column(j).iter().zip(&u).map(|(x, u)| u * x * x).sum()).collect();
        let u_sum = u.iter().sum();
        Self { data, spec, u, u_sum, z, resid, curvature, beta, intercept }
    }

    /// Value of the surrogate at the current point.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn objective(&self) -> f64 {
        let n = self.data.n() as f64;
        let fit: f64 = self.u.iter().zip(&self.resid).map(|(u, r)| u * r * r).sum();
        fit / (2.0 * n) + self.spec.value(&self.beta)
    }

    pub(crate) fn update_intercept(&mut self) -> f64 {
        if self.u_sum <= 0.0 {
            return 0.0;
        }
        let shift = self.u.iter().zip(&self.resid).map(|(u, r)| u * r).sum::<f64>() / self.u_sum;
        self.intercept += shift;
        self.resid.iter_mut().for_each(|r| *r -= shift);
        shift.abs()
    }

    /// Exact minimization over `β_j` with everything else fixed.
    pub(crate) fn update_coordinate(&mut self, j: usize) -> f64 {
        let curv = self.curvature[j];
        if curv <= 0.0 {
            return 0.0;
        }
        let col = self.data.column(j);
        let grad: f64 = col.iter().zip(&self.u).zip(&self.resid).map(|((x, u), r)| x * u * r).sum();
        let old = self.beta[j];
        let target = old + grad / curv;
        let new = self.spec.threshold_scaled(self.data.n() as f64 / curv, target);
        if new != old {
            let delta = new - old;
            self.resid.iter_mut().zip(col).for_each(|(r, &x)| *r -= delta * x);
            self.beta[j] = new;
        }
        (new - old).abs()
    }

    fn sweep(&mut self, coords: &[usize]) -> f64 {
        let mut change = self.update_intercept();
        for &j in coords {
            change = change.max(self.update_coordinate(j));
        }
        change
    }

    /// Active-set cycling: full sweeps alternate with sweeps over the current
    /// nonzero set until a full sweep moves nothing by more than `tol`.
    fn solve(&mut self, tol: f64, max_sweeps: usize) {
        let all: Vec<usize> = (0..self.beta.len()).collect();
        let mut sweeps = 0;
        'outer: while sweeps < max_sweeps {
            sweeps += 1;
            if self.sweep(&all) <= tol {
                break;
            }
            loop {
                if sweeps >= max_sweeps {
                    break 'outer;
                }
                sweeps += 1;
                let active = support_of(&self.beta);
                if self.sweep(&active) <= tol {
                    break;
                }
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn working_response(&self) -> &[f64] {
        &self.z
    }
}

fn check_weights(d: &Dataset, weights: &[f64]) -> Result<(), SolverError> {
    if weights.len() != d.n() {
        return Err(SolverError::Dimension { expected: d.n(), found: weights.len() });
    }
    if weights.iter().any(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
        return Err(SolverError::BadWeights);
    }
    let pos: f64 = weights.iter().zip(d.y()).filter(|(_, &y)| y == 1.0).map(|(v, _)| v).sum();
    let total: f64 = weights.iter().sum();
    if pos <= 0.0 || total - pos <= 0.0 {
        return Err(SolverError::OneClass);
    }
    Ok(())
}

/// A settled fit is moved off its resting point by at most this many exact
/// entry moves.
const MAX_EXACT_ENTRIES: usize = 5;
const ENTRY_NEWTON_STEPS: usize = 8;

/// The zero coefficient whose move away from zero lowers the exact objective
/// the most, with the value it moves to.
///
/// The IRLS quadratic is built at the current point and overstates the loss
/// far from it, so with a nonconvex penalty it can keep a coefficient at zero
/// although some nonzero value is better. Candidates are the coordinates whose
/// quadratic has a nonzero local minimizer; each is refined by Newton steps on
/// the exact one-dimensional objective with the penalty linearized at the
/// current value.
fn best_exact_entry(d: &Dataset, spec: &PenaltySpec, weights: &[f64], beta: &[f64], intercept: f64) -> Option<(usize, f64)> {
    if spec.kind() == PenaltyKind::L1 {
        return None;
    }
    let n = d.n() as f64;
    let eta = linear_scores(beta, intercept, d);
    let probs: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
    let u: Vec<f64> = probs.iter().zip(weights).map(|(f, v)| v * (f * (1.0 - f)).max(WEIGHT_FLOOR)).collect();
    let loss_at_zero: f64 =
        eta.iter().zip(d.y()).zip(weights).map(|((&e, &y), v)| v * sample_loss(e, y)).sum::<f64>() / n;
    let at_zero = loss_at_zero + spec.value_scalar(0.0);

    let mut best: Option<(f64, usize, f64)> = None;
    for j in (0..d.p()).filter(|&j| beta[j] == 0.0) {
        let col = d.column(j);
        let curv: f64 = col.iter().zip(&u).map(|(x, u)| u * x * x).sum();
        if curv <= 0.0 {
            continue;
        }
        let grad: f64 =
            col.iter().zip(&probs).zip(d.y()).zip(weights).map(|(((x, f), y), v)| x * v * (y - f)).sum();
        let Some(start) = stationary_candidate(spec.kind(), spec.lambda() * n / curv, spec.epsilon(), grad / curv)
        else {
            continue;
        };
        if let Some((value, b)) = exact_line_minimum(d, spec, weights, &eta, j, start) {
            let gain = at_zero - value;
            if gain > 1e-12 * at_zero.abs().max(1.0) && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, j, b));
            }
        }
    }
    best.map(|(_, j, b)| (j, b))
}

/// Local minimum of the exact objective along coordinate `j` (currently zero)
/// on the side of `start`, as `(objective, value)`.
fn exact_line_minimum(d: &Dataset, spec: &PenaltySpec, weights: &[f64], eta: &[f64], j: usize, start: f64) -> Option<(f64, f64)> {
    let n = d.n() as f64;
    let col = d.column(j);
    let mut b = start;
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..ENTRY_NEWTON_STEPS {
        let (mut loss, mut g, mut h) = (0.0, 0.0, 0.0);
        for (((&e, &x), &y), &v) in eta.iter().zip(col).zip(d.y()).zip(weights) {
            if v == 0.0 {
                continue;
            }
            let t = e + b * x;
            let f = sigmoid(t);
            loss += v * sample_loss(t, y);
            g += v * (f - y) * x;
            h += v * f * (1.0 - f) * x * x;
        }
        let value = loss / n + spec.value_scalar(b);
        if best.is_none_or(|(o, _)| value < o) {
            best = Some((value, b));
        }
        if h <= 0.0 {
            break;
        }
        let next = b - (g / n + spec.slope(b.abs()).copysign(b)) / (h / n);
        if next == 0.0 || next.signum() != b.signum() || (next - b).abs() <= 1e-10 * b.abs() {
            break;
        }
        b = next;
    }
    best
}

/// `(1/n)·Σ v_i l_i + penalty(β)`.
pub fn working_objective(beta: &[f64], intercept: f64, d: &Dataset, spec: &PenaltySpec, weights: Option<&[f64]>) -> f64 {
    let losses = per_sample_losses(beta, intercept, d);
    let weighted: f64 = match weights {
        Some(v) => losses.iter().zip(v).map(|(l, v)| l * v).sum(),
        None => losses.iter().sum(),
    };
    weighted / d.n() as f64 + spec.value(beta)
}

/// Fits on all samples with unit weights, starting from β = 0.
pub fn fit(d: &Dataset, spec: PenaltySpec, opts: &FitOptions) -> Result<ModelFit, SolverError> {
    fit_weighted(d, spec, opts, None, None)
}

/// Fits with optional per-sample weights in `[0, 1]` and an optional warm
/// start. Without a warm start β starts at 0 and the intercept at the logit
/// of the weighted positive rate.
pub fn fit_weighted(
    d: &Dataset,
    spec: PenaltySpec,
    opts: &FitOptions,
    weights: Option<&[f64]>,
    warm: Option<&ModelFit>,
) -> Result<ModelFit, SolverError> {
    let ones;
    let weights = match weights {
        Some(v) => v,
        None => {
            ones = vec![1.0; d.n()];
            &ones
        }
    };
    check_weights(d, weights)?;

    let (mut beta, mut intercept) = match warm {
        Some(w) if w.beta.len() == d.p() => (w.beta.clone(), w.intercept),
        Some(w) => return Err(SolverError::Dimension { expected: d.p(), found: w.beta.len() }),
        None => {
            let total: f64 = weights.iter().sum();
            let pos: f64 = weights.iter().zip(d.y()).map(|(v, y)| v * y).sum();
            let rate = pos / total;
            (vec![0.0; d.p()], (rate / (1.0 - rate)).ln())
        }
    };

    let mut objective = working_objective(&beta, intercept, d, &spec, Some(weights));
    let mut loss_trace = Vec::new();
    let mut converged = false;
    let mut n_outer_iters = 0;
    let mut entries = 0;
    for outer in 1..=opts.max_outer {
        n_outer_iters = outer;
        let mut step = Surrogate::new(d, spec, weights, beta.clone(), intercept);
        step.solve(0.1 * opts.tol, opts.max_inner);
        let mut next = working_objective(&step.beta, step.intercept, d, &spec, Some(weights));
        // The IRLS quadratic is a local model. When its minimizer does not
        // lower the exact objective, take the step from the global quadratic
        // upper bound instead, which always does.
        if next.is_nan() || next > objective {
            step = Surrogate::majorizer(d, spec, weights, beta.clone(), intercept);
            step.solve(0.1 * opts.tol, opts.max_inner);
            next = working_objective(&step.beta, step.intercept, d, &spec, Some(weights));
        }
        if !next.is_finite() || !step.intercept.is_finite() {
            return Err(SolverError::Divergence { iteration: outer });
        }

        let change = beta
            .iter()
            .zip(&step.beta)
            .map(|(a, b)| (a - b).abs())
            .fold((intercept - step.intercept).abs(), f64::max);
        beta = step.beta;
        intercept = step.intercept;
        objective = next;
        loss_trace.push(objective);

        if change <= opts.tol {
            if entries < MAX_EXACT_ENTRIES {
                if let Some((j, value)) = best_exact_entry(d, &spec, weights, &beta, intercept) {
                    beta[j] = value;
                    objective = working_objective(&beta, intercept, d, &spec, Some(weights));
                    entries += 1;
                    continue;
                }
            }
            converged = true;
            break;
        }
    }

    let support = support_of(&beta);
    Ok(ModelFit { beta, intercept, spec, loss_trace, n_outer_iters, converged, support })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub folds: usize,
    pub grid_size: usize,
    pub seed: u64,
    /// Fixed Logsum ε; `None` uses the per-λ default.
    pub epsilon: Option<f64>,
    pub fit: FitOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self { folds: 10, grid_size: 20, seed: 0, epsilon: None, fit: FitOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub kind: PenaltyKind,
    /// Descending.
    pub lambda_grid: Vec<f64>,
    /// Mean held-out negative log-likelihood per sample.
    pub mean_cv_deviance: Vec<f64>,
    pub chosen_lambda: f64,
    pub fold_count: usize,
    pub seed: u64,
}

/// `max_j |Σ_i x_ij (y_i − ȳ)| / n`: the smallest L1 λ with an all-zero fit
/// on standardized data.
pub fn lambda_max(d: &Dataset) -> f64 {
    let n = d.n() as f64;
    let ybar = d.y().sum() / n;
    (0..d.p())
        .map(|j| d.column(j).iter().zip(d.y()).map(|(x, y)| x * (y - ybar)).sum::<f64>().abs() / n)
        .fold(0.0, f64::max)
}

/// `size` values log-spaced from `lambda_max` down to `0.001·lambda_max`.
pub fn lambda_grid(lambda_max: f64, size: usize) -> Vec<f64> {
    match size {
        0 => Vec::new(),
        1 => vec![lambda_max],
        _ => (0..size).map(|k| lambda_max * 1e-3f64.powf(k as f64 / (size - 1) as f64)).collect(),
    }
}

/// Fold id per row, assigned round-robin within each shuffled class.
pub fn stratified_folds(d: &Dataset, folds: usize, seed: u64) -> Result<Vec<usize>, SolverError> {
    use rand::seq::SliceRandom;
    if folds < 2 {
        return Err(SolverError::BadFolds(folds));
    }
    let mut rng = seeding::rng(seed);
    let mut assignment = vec![0; d.n()];
    for label in [0u8, 1] {
        let mut members = d.class_indices(label);
        if members.len() < folds {
            return Err(SolverError::FoldTooSmall { label, size: members.len(), folds });
        }
        members.shuffle(&mut rng);
        for (k, i) in members.into_iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    Ok(assignment)
}

/// Warm-started fits along a descending λ grid. A failed fit does not break
/// the path; the next λ restarts from the last successful fit.
pub fn fit_path(
    d: &Dataset,
    kind: PenaltyKind,
    grid: &[f64],
    epsilon: Option<f64>,
    opts: &FitOptions,
    weights: Option<&[f64]>,
) -> Vec<Result<ModelFit, SolverError>> {
    let mut warm: Option<ModelFit> = None;
    grid.iter()
        .map(|&lambda| {
            let spec = PenaltySpec::new(kind, lambda, epsilon)?;
            let result = fit_weighted(d, spec, opts, weights, warm.as_ref());
            if let Ok(f) = &result {
                warm = Some(f.clone());
            }
            result
        })
        .collect()
}

/// k-fold stratified cross-validation of λ by held-out deviance. Folds run
/// concurrently; the result depends only on the inputs and `opts.seed`.
pub fn cross_validate(d: &Dataset, kind: PenaltyKind, opts: &CvOptions) -> Result<CvResult, SolverError> {
    let assignment = stratified_folds(d, opts.folds, opts.seed)?;
    let grid = lambda_grid(lambda_max(d), opts.grid_size.max(1));
    // Surface invalid ε before doing any work.
    PenaltySpec::new(kind, grid[grid.len() - 1], opts.epsilon)?;

    let per_fold: Vec<Vec<f64>> = (0..opts.folds)
        .into_par_iter()
        .map(|fold| {
            let (train_rows, test_rows): (Vec<usize>, Vec<usize>) =
                (0..d.n()).partition(|&i| assignment[i] != fold);
            let train = d.subset(&train_rows);
            let test = d.subset(&test_rows);
            fit_path(&train, kind, &grid, opts.epsilon, &opts.fit, None)
                .into_iter()
                .map(|r| match r {
                    Ok(f) => neg_log_likelihood(&f.beta, f.intercept, &test),
                    Err(_) => f64::INFINITY,
                })
                .collect()
        })
        .collect();

    let n = d.n() as f64;
    let mean_cv_deviance: Vec<f64> =
        (0..grid.len()).map(|k| per_fold.iter().map(|fold| fold[k]).sum::<f64>() / n).collect();
    let mut best: Option<usize> = None;
    for (k, &dev) in mean_cv_deviance.iter().enumerate() {
        if dev.is_finite() && best.is_none_or(|b| dev < mean_cv_deviance[b]) {
            best = Some(k);
        }
    }
    let best = best.ok_or(SolverError::NoValidLambda)?;
    Ok(CvResult {
        kind,
        chosen_lambda: grid[best],
        lambda_grid: grid,
        mean_cv_deviance,
        fold_count: opts.folds,
        seed: opts.seed,
    })
}

/// Fit on all of `d` at the chosen λ, warm-started along the same grid
/// prefix the cross-validation scored.
pub fn fit_chosen(d: &Dataset, cv: &CvResult, epsilon: Option<f64>, opts: &FitOptions) -> Result<ModelFit, SolverError> {
    let k = cv.lambda_grid.iter().position(|&l| l == cv.chosen_lambda).ok_or(SolverError::NoValidLambda)?;
    fit_path(d, cv.kind, &cv.lambda_grid[..=k], epsilon, opts, None)
        .pop()
        .ok_or(SolverError::NoValidLambda)?
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_dataset(n: usize, p: usize, seed: u64, signal: &[f64]) -> Dataset {
        let mut rng = seeding::rng(seed);
        let x = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
        let y = (0..n)
            .map(|i| {
                let eta: f64 = signal.iter().enumerate().map(|(j, b)| b * x[[i, j]]).sum();
                if rng.random::<f64>() < sigmoid(eta) { 1.0 } else { 0.0 }
            })
            .collect();
        let names = (0..p).map(|j| format!("x{j}")).collect();
        Dataset::new(x, y, names).unwrap().standardize().unwrap().0
    }

    #[test]
    fn sigmoid_examples() {
        let fit = ModelFit {
            beta: vec![0.0, 0.0],
            intercept: 0.0,
            spec: PenaltySpec::l1(1.0).unwrap(),
            loss_trace: vec![],
            n_outer_iters: 0,
            converged: true,
            support: vec![],
        };
        assert_eq!(fit.predict_proba(&[3.0, -7.0]).unwrap(), 0.5);
        let shifted = ModelFit { intercept: 3f64.ln(), ..fit.clone() };
        assert!((shifted.predict_proba(&[1.0, 1.0]).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(fit.predict_proba(&[1.0]), Err(SolverError::Dimension { .. })));
        assert!(sigmoid(800.0) < 1.0 + 1e-15 && sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(-800.0).is_finite());
    }

    #[test]
    fn nll_at_zero_is_n_log_two() {
        let d = random_dataset(37, 3, 1, &[1.0]);
        let nll = neg_log_likelihood(&[0.0; 3], 0.0, &d);
        assert!((nll - 37.0 * 2f64.ln()).abs() < 1e-10);
        let losses = per_sample_losses(&[0.5, -0.2, 0.1], 0.3, &d);
        let total: f64 = losses.iter().sum();
        assert!((total - neg_log_likelihood(&[0.5, -0.2, 0.1], 0.3, &d)).abs() < 1e-12);
    }

    #[test]
    fn separated_data_has_tiny_loss() {
        let x = Array2::from_shape_vec((6, 1), vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]).unwrap();
        let d = Dataset::new(x, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], vec!["a".into()]).unwrap();
        assert!(neg_log_likelihood(&[40.0], 0.0, &d) <= 6.0 * 1e-6);
        // The probability floor caps each term.
        assert!(neg_log_likelihood(&[-1e4], 0.0, &d) <= 6.0 * -PROB_FLOOR.ln() + 1e-9);
    }

    #[test]
    fn working_set_at_origin() {
        let x = Array2::from_shape_vec((2, 1), vec![0.3, -0.4]).unwrap();
        let d = Dataset::new(x, vec![1.0, 0.0], vec!["a".into()]).unwrap();
        let ws = irls_working_set(&[0.0], 0.0, &d);
        assert_eq!(ws.w, vec![0.25, 0.25]);
        assert_eq!(ws.z, vec![2.0, -2.0]);
    }

    #[test]
    fn working_set_gradient_matches_loss_gradient() {
        for seed in 0..5 {
            let d = random_dataset(40, 4, seed, &[1.0, -0.5]);
            let beta = [0.3, -0.2, 0.1, 0.05];
            let b0 = 0.2;
            let ws = irls_working_set(&beta, b0, &d);
            let eta = linear_scores(&beta, b0, &d);
            // ∂/∂β of ½ Σ W (Z − η)² at the expansion point is −Σ W (Z − η) x.
            let (g0, g) = nll_gradient(&beta, b0, &d);
            let s0: f64 = -ws.w.iter().zip(&ws.z).zip(&eta).map(|((w, z), e)| w * (z - e)).sum::<f64>();
            assert!((s0 - g0).abs() < 1e-6);
            for (j, gj) in g.iter().enumerate() {
                let sj: f64 = -(0..d.n()).map(|i| ws.w[i] * (ws.z[i] - eta[i]) * d.x()[[i, j]]).sum::<f64>();
                assert!((sj - gj).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn coordinate_updates_never_increase_surrogate() {
        for seed in 0..6 {
            let d = random_dataset(80, 12, seed, &[1.5, -1.0, 0.8]);
            for kind in PenaltyKind::ALL {
                let spec = PenaltySpec::new(kind, 0.02, None).unwrap();
                let weights: Vec<f64> = (0..d.n()).map(|i| if i % 5 == 0 { 0.0 } else { 1.0 }).collect();
                let beta = (0..12).map(|j| 0.1 * j as f64 - 0.4).collect();
                let mut s = Surrogate::new(&d, spec, &weights, beta, 0.1);
                assert_eq!(s.working_response().len(), d.n());
                let mut last = s.objective();
                for _ in 0..3 {
                    s.update_intercept();
                    let now = s.objective();
                    assert!(now <= last + 1e-10, "{kind}: intercept {last} -> {now}");
                    last = now;
                    for j in 0..12 {
                        s.update_coordinate(j);
                        let now = s.objective();
                        assert!(now <= last + 1e-10, "{kind}: coord {j} {last} -> {now}");
                        last = now;
                    }
                }
            }
        }
    }

    #[test]
    fn huge_lambda_gives_null_model() {
        let d = random_dataset(60, 5, 3, &[2.0]);
        let lmax = lambda_max(&d);
        let fit = fit(&d, PenaltySpec::l1(lmax).unwrap(), &FitOptions::default()).unwrap();
        assert!(fit.beta.iter().all(|&b| b == 0.0));
        assert!(fit.support.is_empty());
        let rate = d.y().sum() / d.n() as f64;
        assert!((fit.intercept - (rate / (1.0 - rate)).ln()).abs() < 1e-10);
        for kind in [PenaltyKind::Half, PenaltyKind::Logsum] {
            let fit = super::fit(&d, PenaltySpec::new(kind, 10.0 * lmax, None).unwrap(), &FitOptions::default()).unwrap();
            assert!(fit.support.is_empty(), "{kind}");
        }
        // Slightly below λ_max, L1 lets a descriptor in.
        let fit = super::fit(&d, PenaltySpec::l1(0.9 * lmax).unwrap(), &FitOptions::default()).unwrap();
        assert!(!fit.support.is_empty());
    }

    #[test]
    fn weight_scaling_identity() {
        let d = random_dataset(70, 6, 9, &[1.0, -1.0]);
        for kind in PenaltyKind::ALL {
            let full = PenaltySpec::new(kind, 0.04, Some(0.01)).unwrap();
            let half = PenaltySpec::new(kind, 0.02, Some(0.01)).unwrap();
            let a = fit_weighted(&d, full, &FitOptions::default(), None, None).unwrap();
            let b = fit_weighted(&d, half, &FitOptions::default(), Some(&vec![0.5; d.n()]), None).unwrap();
            for (x, y) in a.beta.iter().zip(&b.beta) {
                assert!((x - y).abs() < 1e-6, "{kind}");
            }
        }
    }

    #[test]
    fn one_class_and_bad_weights() {
        let d = random_dataset(30, 2, 4, &[1.0]);
        let spec = PenaltySpec::l1(0.1).unwrap();
        let only_pos: Vec<f64> = d.y().iter().copied().collect();
        assert!(matches!(
            fit_weighted(&d, spec, &FitOptions::default(), Some(&only_pos), None),
            Err(SolverError::OneClass)
        ));
        assert!(matches!(
            fit_weighted(&d, spec, &FitOptions::default(), Some(&vec![1.5; 30]), None),
            Err(SolverError::BadWeights)
        ));
    }

    #[test]
    fn fit_records_finite_trace() {
        let d = random_dataset(100, 20, 5, &[2.0, -1.5, 1.0]);
        for kind in PenaltyKind::ALL {
            let f = fit(&d, PenaltySpec::new(kind, 0.03, None).unwrap(), &FitOptions::default()).unwrap();
            assert!(f.converged, "{kind}");
            assert!(f.loss_trace.iter().all(|v| v.is_finite()));
            assert_eq!(f.loss_trace.len(), f.n_outer_iters);
            assert_eq!(f.support, support_of(&f.beta));
            if kind == PenaltyKind::L1 {
                assert!(f.support.contains(&0));
            }
        }
    }

    #[test]
    fn grid_shape() {
        assert_eq!(lambda_grid(2.0, 1), vec![2.0]);
        let g = lambda_grid(2.0, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 2.0);
        assert!((g[4] - 0.002).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn cv_degenerate_grid_and_determinism() {
        let d = random_dataset(80, 10, 2, &[1.5, -1.0]);
        let opts = CvOptions { folds: 5, grid_size: 1, seed: 4, ..CvOptions::default() };
        let r = cross_validate(&d, PenaltyKind::Logsum, &opts).unwrap();
        assert_eq!(r.chosen_lambda, lambda_max(&d));
        let opts = CvOptions { folds: 5, grid_size: 8, seed: 4, ..CvOptions::default() };
        let a = cross_validate(&d, PenaltyKind::L1, &opts).unwrap();
        let b = cross_validate(&d, PenaltyKind::L1, &opts).unwrap();
        assert_eq!(a, b);
        let best = a.mean_cv_deviance.iter().cloned().fold(f64::INFINITY, f64::min);
        let k = a.lambda_grid.iter().position(|&l| l == a.chosen_lambda).unwrap();
        assert_eq!(a.mean_cv_deviance[k], best);
        assert!(a.mean_cv_deviance[..k].iter().all(|&v| v > best));
    }

    #[test]
    fn folds_are_stratified() {
        let d = random_dataset(50, 2, 8, &[1.0]);
        let folds = stratified_folds(&d, 5, 1).unwrap();
        for f in 0..5 {
            let members: Vec<usize> = (0..50).filter(|&i| folds[i] == f).collect();
            let pos = members.iter().filter(|&&i| d.y()[i] == 1.0).count();
            assert!(pos > 0 && pos < members.len());
        }
        assert!(matches!(stratified_folds(&d, 1, 0), Err(SolverError::BadFolds(1))));
        assert!(matches!(stratified_folds(&d, 49, 0), Err(SolverError::FoldTooSmall { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn odds_identity(seed in any::<u64>()) {
            let mut rng = seeding::rng(seed);
            let beta: Vec<f64> = (0..5).map(|_| StandardNormal.sample(&mut rng)).collect();
            let x: Vec<f64> = (0..5).map(|_| StandardNormal.sample(&mut rng)).collect();
            let intercept: f64 = StandardNormal.sample(&mut rng);
            let fit = ModelFit {
                support: support_of(&beta),
                beta: beta.clone(),
                intercept,
                spec: PenaltySpec::l1(1.0).unwrap(),
                loss_trace: vec![],
                n_outer_iters: 0,
                converged: true,
            };
            let p = fit.predict_proba(&x).unwrap();
            prop_assert!(p > 0.0 && p < 1.0);
            let eta = intercept + beta.iter().zip(&x).map(|(b, x)| b * x).sum::<f64>();
            let odds = p / (1.0 - p);
            prop_assert!((odds / eta.exp() - 1.0).abs() <= 1e-10);
        }
    }
}
