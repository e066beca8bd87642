use proptest::prelude::*;
use splogsum::auc;
use splogsum::metrics::{student_t_two_sided, welch_t_test};
use statrs::distribution::{ContinuousCDF, StudentsT};

fn reference_two_sided(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    2.0 * dist.cdf(-t.abs())
}

/// Fraction of (positive, negative) pairs ranked correctly, ties worth half.
fn pairwise_auc(scores: &[f64], labels: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (&si, _) in scores.iter().zip(labels).filter(|(_, &y)| y == 1.0) {
        for (&sj, _) in scores.iter().zip(labels).filter(|(_, &y)| y == 0.0) {
            pairs += 1.0;
            wins += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
        }
    }
    wins / pairs
}

#[test]
fn t_tail_matches_reference_on_a_grid() {
    for df in [1.0, 2.5, 4.0, 9.7, 30.0, 250.0] {
        for t in [0.0, 0.3, 1.0, 1.96, 3.5, 8.0] {
            let (ours, theirs) = (student_t_two_sided(t, df), reference_two_sided(t, df));
            assert!((ours - theirs).abs() <= 1e-9 + 1e-7 * theirs, "t={t} df={df}: {ours} vs {theirs}");
        }
    }
}

#[test]
fn welch_separates_shifted_samples() {
    let a: Vec<f64> = (0..30).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
    let b: Vec<f64> = (0..25).map(|i| (i as f64 * 0.91).cos()).collect();
    let (t, df, p) = welch_t_test(&a, &b);
    assert!(t > 0.0 && df > 1.0);
    assert!((p - reference_two_sided(t, df)).abs() <= 1e-9);
}

proptest! {
    #[test]
    fn t_tail_matches_reference(t in -12.0f64..12.0, df in 1.0f64..400.0) {
        let (ours, theirs) = (student_t_two_sided(t, df), reference_two_sided(t, df));
        prop_assert!((ours - theirs).abs() <= 1e-9 + 1e-7 * theirs, "t={} df={}: {} vs {}", t, df, ours, theirs);
    }

    #[test]
    fn auc_matches_pair_counting(raw in prop::collection::vec((0u8..6, any::<bool>()), 4..60)) {
        let scores: Vec<f64> = raw.iter().map(|(s, _)| *s as f64 / 5.0).collect();
        let mut labels: Vec<f64> = raw.iter().map(|(_, y)| if *y { 1.0 } else { 0.0 }).collect();
        labels[0] = 1.0;
        labels[1] = 0.0;
        prop_assert!((auc(&scores, &labels).unwrap() - pairwise_auc(&scores, &labels)).abs() <= 1e-12);
    }
}
