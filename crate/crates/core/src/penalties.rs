//! Sparsity penalties and their univariate thresholding operators.
//!
//! Each operator returns the *global* minimizer of
//!
//! ```text
//! ½(β − w)² + λ·g(β)
//! ```
//!
//! for scalar β, where `g` is `|β|` (L1), `|β|^½` (half) or `log(|β| + ε)`
//! (Logsum). The two nonconvex operators compute the nonzero stationary point
//! in closed form and then compare it against β = 0, since a stationary point
//! of a nonconvex objective is not necessarily its minimum.
//!
//! [`PenaltySpec::oracle_threshold`] is a brute-force grid minimizer kept in
//! the public surface so that callers (and the test-suite) can certify the
//! closed forms.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Penalty family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    L1,
    Half,
    Logsum,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 3] = [PenaltyKind::L1, PenaltyKind::Half, PenaltyKind::Logsum];

    pub fn as_str(&self) -> &'static str {
        match self {
            PenaltyKind::L1 => "l1",
            PenaltyKind::Half => "half",
            PenaltyKind::Logsum => "logsum",
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PenaltyKind {
    type Err = PenaltyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "lasso" => Ok(PenaltyKind::L1),
            "half" | "l1/2" | "l12" => Ok(PenaltyKind::Half),
            "logsum" => Ok(PenaltyKind::Logsum),
            _ => Err(PenaltyError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PenaltyError {
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("logsum epsilon must lie in (0, sqrt(lambda)) = (0, {bound}), got {epsilon}")]
    InvalidEpsilon { epsilon: f64, bound: f64 },
    #[error("unknown penalty kind `{0}` (expected l1, half or logsum)")]
    UnknownKind(String),
}

/// Default Logsum ε as a fraction of √λ.
pub const DEFAULT_EPSILON_RATIO: f64 = 0.01;

/// A validated penalty: family plus hyperparameters.
///
/// `epsilon` is only meaningful for [`PenaltyKind::Logsum`]; for the other
/// families it is carried along but ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    kind: PenaltyKind,
    lambda: f64,
    epsilon: f64,
}

impl PenaltySpec {
    /// Builds a spec, filling in `ε = 0.01·√λ` when `epsilon` is `None`.
    pub fn new(kind: PenaltyKind, lambda: f64, epsilon: Option<f64>) -> Result<Self, PenaltyError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(PenaltyError::InvalidLambda(lambda));
        }
        let bound = lambda.sqrt();
        let epsilon = epsilon.unwrap_or(DEFAULT_EPSILON_RATIO * bound);
        if kind == PenaltyKind::Logsum && !(epsilon > 0.0 && epsilon < bound) {
            return Err(PenaltyError::InvalidEpsilon { epsilon, bound });
        }
        Ok(Self { kind, lambda, epsilon })
    }

    pub fn l1(lambda: f64) -> Result<Self, PenaltyError> {
        Self::new(PenaltyKind::L1, lambda, None)
    }

    pub fn half(lambda: f64) -> Result<Self, PenaltyError> {
        Self::new(PenaltyKind::Half, lambda, None)
    }

    pub fn logsum(lambda: f64, epsilon: f64) -> Result<Self, PenaltyError> {
        Self::new(PenaltyKind::Logsum, lambda, Some(epsilon))
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Penalty of a single coefficient, `g(β)` multiplied by λ.
    pub fn value_scalar(&self, beta: f64) -> f64 {
        self.lambda * self.unit_value(beta)
    }

    /// Total penalty `λ·Σ_j g(β_j)`. The intercept must not be part of `beta`.
    ///
    /// The Logsum value is negative whenever `|β_j| + ε < 1`; only differences
    /// of penalty values are meaningful.
    pub fn value(&self, beta: &[f64]) -> f64 {
        self.lambda * beta.iter().map(|&b| self.unit_value(b)).sum::<f64>()
    }

    fn unit_value(&self, beta: f64) -> f64 {
        match self.kind {
            PenaltyKind::L1 => beta.abs(),
            PenaltyKind::Half => beta.abs().sqrt(),
            PenaltyKind::Logsum => (beta.abs() + self.epsilon).ln(),
        }
    }

    /// `λ·g'(|β|)` for `β ≠ 0`.
    pub(crate) fn slope(&self, magnitude: f64) -> f64 {
        self.lambda
            * match self.kind {
                PenaltyKind::L1 => 1.0,
                PenaltyKind::Half => 0.5 / magnitude.sqrt(),
                PenaltyKind::Logsum => 1.0 / (magnitude + self.epsilon),
            }
    }

    /// `½(β − w)² + λ·g(β)`.
    pub fn univariate_objective(&self, w: f64, beta: f64) -> f64 {
        0.5 * (beta - w) * (beta - w) + self.value_scalar(beta)
    }

    /// Global minimizer of `½(β − w)² + λ·g(β)`.
    pub fn threshold(&self, w: f64) -> f64 {
        threshold_with(self.kind, self.lambda, self.epsilon, w)
    }

    /// Same as [`threshold`](Self::threshold) with λ replaced by `λ·scale`.
    ///
    /// Coordinate descent divides each coordinate's quadratic by its curvature,
    /// which rescales λ but leaves ε untouched; the rescaled λ need not
    /// satisfy the `ε < √λ` construction constraint.
    pub fn threshold_scaled(&self, scale: f64, w: f64) -> f64 {
        threshold_with(self.kind, self.lambda * scale, self.epsilon, w)
    }

    /// Exhaustive grid minimizer of the univariate objective over
    /// `{k·step : |k·step| ≤ halfwidth}`. Ties go to the point closest to 0.
    pub fn oracle_threshold(&self, w: f64, halfwidth: f64, step: f64) -> f64 {
        assert!(step > 0.0, "oracle step must be positive");
        let k_max = (halfwidth / step).floor() as i64;
        let mut best: f64 = 0.0;
        let mut best_obj = self.univariate_objective(w, 0.0);
        for k in -k_max..=k_max {
            let beta = k as f64 * step;
            let obj = self.univariate_objective(w, beta);
            if obj < best_obj || (obj == best_obj && beta.abs() < best.abs()) {
                best = beta;
                best_obj = obj;
            }
        }
        best
    }
}

impl fmt::Display for PenaltySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PenaltyKind::Logsum => write!(f, "logsum(lambda={}, epsilon={})", self.lambda, self.epsilon),
            k => write!(f, "{k}(lambda={})", self.lambda),
        }
    }
}

pub(crate) fn threshold_with(kind: PenaltyKind, lambda: f64, epsilon: f64, w: f64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let a = w.abs();
    let magnitude = match kind {
        PenaltyKind::L1 => (a - lambda).max(0.0),
        PenaltyKind::Half => half_magnitude(lambda, a),
        PenaltyKind::Logsum => logsum_magnitude(lambda, epsilon, a),
    };
    if magnitude == 0.0 {
        0.0
    } else {
        magnitude.copysign(w)
    }
}

/// The nonzero stationary point of `½(β − w)² + λ·g(β)` on the side of `w`
/// that is a local minimizer, whether or not it beats β = 0. `None` when the
/// univariate objective has no such point.
pub(crate) fn stationary_candidate(kind: PenaltyKind, lambda: f64, epsilon: f64, w: f64) -> Option<f64> {
    let a = w.abs();
    let root = match kind {
        PenaltyKind::L1 => Some(a - lambda).filter(|&r| r > 0.0),
        PenaltyKind::Half => half_root(lambda, a),
        PenaltyKind::Logsum => logsum_root(lambda, epsilon, a),
    };
    root.map(|r| r.copysign(w))
}

fn half_root(lambda: f64, a: f64) -> Option<f64> {
    let arg = (lambda / 4.0) * (a / 3.0).powf(-1.5);
    if !(a > 0.0 && arg <= 1.0) {
        return None;
    }
    let phi = arg.acos();
    Some((2.0 / 3.0) * a * (1.0 + (2.0 * PI / 3.0 - 2.0 * phi / 3.0).cos())).filter(|&r| r > 0.0)
}

/// The larger root of `β² + (ε − |w|)β + λ − |w|ε = 0`.
fn logsum_root(lambda: f64, epsilon: f64, a: f64) -> Option<f64> {
    let c1 = a - epsilon;
    let c2 = c1 * c1 - 4.0 * (lambda - a * epsilon);
    if c2 <= 0.0 {
        return None;
    }
    Some(0.5 * (c1 + c2.sqrt())).filter(|&r| r > 0.0)
}

/// Half-thresholding on `|w|`; λ here multiplies `|β|^½` in the ½-scaled
/// objective, so the jump point is `(3/2)·λ^{2/3}`.
fn half_magnitude(lambda: f64, a: f64) -> f64 {
    if a <= 1.5 * lambda.powf(2.0 / 3.0) {
        return 0.0;
    }
    let obj = |b: f64| 0.5 * (b - a) * (b - a) + lambda * b.sqrt();
    half_root(lambda, a).filter(|&r| obj(r) < obj(0.0)).unwrap_or(0.0)
}

fn logsum_magnitude(lambda: f64, epsilon: f64, a: f64) -> f64 {
    let obj = |b: f64| 0.5 * (b - a) * (b - a) + lambda * (b + epsilon).ln();
    logsum_root(lambda, epsilon, a).filter(|&r| obj(r) < obj(0.0)).unwrap_or(0.0)
}
