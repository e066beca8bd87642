//! Independent reference computations used by the integration and
//! acceptance tests. Nothing here calls into the solver.

#![allow(dead_code, clippy::needless_range_loop)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use splogsum::{Dataset, PenaltyKind, PenaltySpec};

pub fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() }
}

/// Mean negative log-likelihood, straight from the definition.
pub fn mean_nll(d: &Dataset, intercept: f64, beta: &[f64]) -> f64 {
    let x = d.x();
    let total: f64 = (0..d.n())
        .map(|i| {
            let eta = intercept + (0..d.p()).map(|j| x[[i, j]] * beta[j]).sum::<f64>();
            softplus(eta) - d.y()[i] * eta
        })
        .sum();
    total / d.n() as f64
}

pub fn penalty(kind: PenaltyKind, lambda: f64, epsilon: f64, beta: &[f64]) -> f64 {
    beta.iter()
        .map(|b| match kind {
            PenaltyKind::L1 => lambda * b.abs(),
            PenaltyKind::Half => lambda * b.abs().sqrt(),
            PenaltyKind::Logsum => lambda * (b.abs() + epsilon).ln(),
        })
        .sum()
}

/// Central differences of the mean NLL with respect to every coefficient.
pub fn finite_difference_gradient(d: &Dataset, intercept: f64, beta: &[f64], h: f64) -> Vec<f64> {
    (0..beta.len())
        .map(|j| {
            let mut up = beta.to_vec();
            let mut down = beta.to_vec();
            up[j] += h;
            down[j] -= h;
            (mean_nll(d, intercept, &up) - mean_nll(d, intercept, &down)) / (2.0 * h)
        })
        .collect()
}

/// Intercept minimizing the mean NLL for fixed coefficients (1-D Newton).
pub fn profile_intercept(d: &Dataset, beta: &[f64]) -> f64 {
    let x = d.x();
    let offsets: Vec<f64> = (0..d.n()).map(|i| (0..d.p()).map(|j| x[[i, j]] * beta[j]).sum()).collect();
    let mut b0 = 0.0;
    for _ in 0..100 {
        let (mut g, mut h) = (0.0, 0.0);
        for (i, off) in offsets.iter().enumerate() {
            let f = logistic(b0 + off);
            g += f - d.y()[i];
            h += f * (1.0 - f);
        }
        let step = g / h.max(1e-12);
        b0 -= step;
        if step.abs() < 1e-13 {
            break;
        }
    }
    b0
}

fn profiled_objective(d: &Dataset, spec: &PenaltySpec, beta: &[f64]) -> f64 {
    let b0 = profile_intercept(d, beta);
    mean_nll(d, b0, beta) + penalty(spec.kind(), spec.lambda(), spec.epsilon(), beta)
}

/// Global minimizer over `(β1, β2)` of the penalized mean NLL, with the
/// intercept profiled out.
///
/// Each support pattern is searched separately because the penalty has kinks
/// (and for Logsum, deep wells) on the axes: the origin, each axis on a 1-D
/// grid, and the open quadrants on a 2-D grid. Every search is a coarse grid
/// followed by two rounds of local refinement around its best point.
pub fn grid_minimize_2d(d: &Dataset, spec: &PenaltySpec, bound: f64) -> [f64; 2] {
    assert_eq!(d.p(), 2);
    let obj = |b: [f64; 2]| profiled_objective(d, spec, &b);
    let coarse = 0.02;
    let steps = (bound / coarse).round() as i64;

    let refine_1d = |axis: usize, mut centre: f64| {
        for step in [coarse / 20.0, coarse / 400.0] {
            let mut best = (f64::INFINITY, centre);
            for k in -20..=20 {
                let v = centre + k as f64 * step;
                if v.abs() < 0.5 * step {
                    continue;
                }
                let mut b = [0.0; 2];
                b[axis] = v;
                let o = obj(b);
                if o < best.0 {
                    best = (o, v);
                }
            }
            centre = best.1;
        }
        let mut b = [0.0; 2];
        b[axis] = centre;
        (obj(b), b)
    };

    let mut candidates = vec![(obj([0.0, 0.0]), [0.0, 0.0])];
    for axis in 0..2 {
        let mut best = (f64::INFINITY, 0.0);
        for k in (-steps..=steps).filter(|&k| k != 0) {
            let v = k as f64 * coarse;
            let mut b = [0.0; 2];
            b[axis] = v;
            let o = obj(b);
            if o < best.0 {
                best = (o, v);
            }
        }
        candidates.push(refine_1d(axis, best.1));
    }

    let mut best = (f64::INFINITY, [0.0; 2]);
    for k1 in (-steps..=steps).filter(|&k| k != 0) {
        for k2 in (-steps..=steps).filter(|&k| k != 0) {
            let b = [k1 as f64 * coarse, k2 as f64 * coarse];
            let o = obj(b);
            if o < best.0 {
                best = (o, b);
            }
        }
    }
    let mut centre = best.1;
    for step in [coarse / 20.0, coarse / 400.0] {
        let mut local = (f64::INFINITY, centre);
        for k1 in -20..=20 {
            for k2 in -20..=20 {
                let b = [centre[0] + k1 as f64 * step, centre[1] + k2 as f64 * step];
                // Points on an axis belong to the 1-D searches.
                if b[0].abs() < 0.5 * step || b[1].abs() < 0.5 * step || b[0].signum() != centre[0].signum() || b[1].signum() != centre[1].signum() {
                    continue;
                }
                let o = obj(b);
                if o < local.0 {
                    local = (o, b);
                }
            }
        }
        centre = local.1;
    }
    candidates.push((obj(centre), centre));

    candidates.into_iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap().1
}

/// Unpenalized logistic regression by full Newton steps on `[1, X]`.
pub fn newton_logistic(d: &Dataset) -> (f64, Vec<f64>) {
    let (n, p) = (d.n(), d.p());
    let x = d.x();
    let mut theta = vec![0.0; p + 1];
    let design = |i: usize, j: usize| if j == 0 { 1.0 } else { x[[i, j - 1]] };
    for _ in 0..100 {
        let mut grad = vec![0.0; p + 1];
        let mut hess = vec![vec![0.0; p + 1]; p + 1];
        for i in 0..n {
            let eta: f64 = (0..=p).map(|j| design(i, j) * theta[j]).sum();
            let f = logistic(eta);
            let w = f * (1.0 - f);
            for j in 0..=p {
                grad[j] += (f - d.y()[i]) * design(i, j);
                for k in 0..=p {
                    hess[j][k] += w * design(i, j) * design(i, k);
                }
            }
        }
        let step = solve(hess, grad);
        for (t, s) in theta.iter_mut().zip(&step) {
            *t -= s;
        }
        if step.iter().map(|s| s.abs()).fold(0.0, f64::max) < 1e-12 {
            break;
        }
    }
    (theta[0], theta[1..].to_vec())
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Standardized Gaussian design with logistic labels from `signal`
/// (coefficients on the leading columns).
pub fn logistic_dataset(n: usize, p: usize, signal: &[f64], seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let x = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eta: f64 = signal.iter().enumerate().map(|(j, b)| b * x[[i, j]]).sum();
                if rng.random::<f64>() < logistic(eta) { 1.0 } else { 0.0 }
            })
            .collect();
        let positives = y.iter().filter(|&&v| v == 1.0).count();
        if positives >= 3 && n - positives >= 3 {
            let names = (1..=p).map(|j| format!("x{j}")).collect();
            return Dataset::new(x, y, names).unwrap().standardize().unwrap().0;
        }
    }
}
