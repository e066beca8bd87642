//! Classification scores and per-descriptor significance.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("both classes must be present")]
    SingleClass,
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    Length { scores: usize, labels: usize },
    #[error("empty descriptor support")]
    EmptySupport,
    #[error("class {0} needs at least two samples for a t-test")]
    TooFewForTTest(u8),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn class_sizes(scores: &[f64], labels: &[f64]) -> Result<(usize, usize), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::Length { scores: scores.len(), labels: labels.len() });
    }
    let pos = labels.iter().filter(|&&y| y == 1.0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    Ok((pos, neg))
}

/// Ranks starting at 1, ties receiving their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Area under the ROC curve as the Mann–Whitney statistic
/// `P(score⁺ > score⁻) + ½·P(tie)`.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64, MetricsError> {
    let (pos, neg) = class_sizes(scores, labels)?;
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &y)| y == 1.0).map(|(r, _)| r).sum();
    let (pos, neg) = (pos as f64, neg as f64);
    Ok((rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub auc: f64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub threshold: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

pub const DEFAULT_CUTOFF: f64 = 0.5;

/// Confusion-matrix scores with class 1 predicted when `score ≥ cutoff`.
pub fn confusion_report(scores: &[f64], labels: &[f64], cutoff: f64) -> Result<ClassificationReport, MetricsError> {
    let (n_pos, n_neg) = class_sizes(scores, labels)?;
    let (mut tp, mut tn) = (0, 0);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= cutoff, y == 1.0) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            _ => {}
        }
    }
    Ok(ClassificationReport {
        auc: auc(scores, labels)?,
        accuracy: (tp + tn) as f64 / (n_pos + n_neg) as f64,
        sensitivity: tp as f64 / n_pos as f64,
        specificity: tn as f64 / n_neg as f64,
        threshold: cutoff,
        n_pos,
        n_neg,
        tp,
        tn,
        fp: n_neg - tn,
        fn_: n_pos - tp,
    })
}

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

pub(crate) fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let a = LANCZOS[1..].iter().enumerate().fold(LANCZOS[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
        let t = x + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub(crate) fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability `P(|T| ≥ |t|)` for Student's t with `df`
/// degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance t-test; returns `(t, df, two-sided p)`.
///
/// With zero variance in both groups the p-value is 0 when the means differ
/// and 1 when they coincide.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 <= 0.0 {
        return if ma == mb { (0.0, f64::NAN, 1.0) } else { ((ma - mb).signum() * f64::INFINITY, f64::NAN, 0.0) };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    (t, df, student_t_two_sided(t, df))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorEntry {
    pub rank: usize,
    pub index: usize,
    pub name: String,
    pub coefficient: f64,
    pub p_value: f64,
    pub class_tag: Option<String>,
}

/// Selected descriptors ordered by decreasing `|coefficient|`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DescriptorReport {
    pub entries: Vec<DescriptorEntry>,
}

impl DescriptorReport {
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), MetricsError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["rank", "name", "coefficient", "p_value", "class_tag"])?;
        for e in &self.entries {
            w.write_record([
                e.rank.to_string(),
                e.name.clone(),
                e.coefficient.to_string(),
                e.p_value.to_string(),
                e.class_tag.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Welch p-value of every descriptor in `support`, comparing its values in
/// class 1 against class 0, paired with its fitted coefficient.
pub fn descriptor_pvalues(
    d: &Dataset,
    coefficients: &[f64],
    support: &[usize],
    class_tags: Option<&HashMap<String, String>>,
) -> Result<DescriptorReport, MetricsError> {
    if support.is_empty() {
        return Err(MetricsError::EmptySupport);
    }
    let positives = d.class_indices(1);
    let negatives = d.class_indices(0);
    for (label, members) in [(0u8, &negatives), (1u8, &positives)] {
        if members.len() < 2 {
            return Err(MetricsError::TooFewForTTest(label));
        }
    }
    let mut entries: Vec<DescriptorEntry> = support
        .iter()
        .map(|&j| {
            let col = d.column(j);
            let a: Vec<f64> = positives.iter().map(|&i| col[i]).collect();
            let b: Vec<f64> = negatives.iter().map(|&i| col[i]).collect();
            let name = d.names()[j].clone();
            DescriptorEntry {
                rank: 0,
                index: j,
                class_tag: class_tags.and_then(|t| t.get(&name).cloned()),
                name,
                coefficient: coefficients[j],
                p_value: welch_t_test(&a, &b).2,
            }
        })
        .collect();
    entries.sort_by(|x, y| y.coefficient.abs().total_cmp(&x.coefficient.abs()).then(x.index.cmp(&y.index)));
    for (k, e) in entries.iter_mut().enumerate() {
        e.rank = k + 1;
    }
    Ok(DescriptorReport { entries })
}
