//! Metric properties checked against independent computations: the
//! Mann-Whitney pairwise count for AUC, symmetry laws for MCC and F1, and
//! the hard-label log-loss identity.

use proptest::prelude::*;
use rand::Rng;
use tabstack::metrics::{
    auc, confusion, log_loss, mcc, roc_curve, threshold_metrics, ConfusionMatrix,
};
use tabstack::rng::rng_from;

/// (#concordant + half #tied) / (#pos * #neg) by brute force over all pairs.
fn mann_whitney(labels: &[u8], scores: &[f64]) -> f64 {
    let mut concordant = 0.0;
    let mut pairs = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        if yi != 1 {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                concordant += 1.0;
            } else if scores[i] == scores[j] {
                concordant += 0.5;
            }
        }
    }
    concordant / pairs
}

#[test]
fn auc_equals_mann_whitney_on_100_tied_fixtures() {
    let mut rng = rng_from(2024);
    let mut done = 0;
    while done < 100 {
        let n = rng.random_range(2..=60);
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
        if !(labels.contains(&0) && labels.contains(&1)) {
            continue;
        }
        // scores on a coarse grid so ties actually occur
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..=10) as f64 / 10.0).collect();
        let curve = roc_curve(&labels, &scores).unwrap();
        let trapezoid = auc(&curve);
        let pairwise = mann_whitney(&labels, &scores);
        assert!(
            (trapezoid - pairwise).abs() < 1e-12,
            "trapezoid {trapezoid} vs pairwise {pairwise} on n={n}"
        );
        done += 1;
    }
}

#[test]
fn roc_curves_are_monotone_and_anchored() {
    let mut rng = rng_from(77);
    for _ in 0..100 {
        let n = rng.random_range(2..=40);
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
        if !(labels.contains(&0) && labels.contains(&1)) {
            continue;
        }
        let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let curve = roc_curve(&labels, &scores).unwrap();
        assert_eq!(curve.points[0], (0.0, 0.0));
        assert_eq!(*curve.points.last().unwrap(), (1.0, 1.0));
        for pair in curve.points.windows(2) {
            assert!(pair[1].0 >= pair[0].0, "FPR decreased");
            assert!(pair[1].1 >= pair[0].1, "TPR decreased");
        }
        assert!(
            curve.thresholds.windows(2).all(|w| w[0] > w[1]),
            "thresholds must strictly descend"
        );
    }
}

proptest! {
    #[test]
    fn mcc_is_invariant_under_class_swap(tp in 0u64..200, fp in 0u64..200, tn in 0u64..200, fn_ in 0u64..200) {
        prop_assume!(tp + fp + tn + fn_ > 0);
        let a: f64 = mcc(&ConfusionMatrix::new(tp, fp, tn, fn_));
        let b: f64 = mcc(&ConfusionMatrix::new(tn, fn_, tp, fp));
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&a));
    }

    #[test]
    fn f1_lies_between_precision_and_sensitivity(tp in 1u64..200, fp in 0u64..200, tn in 0u64..200, fn_ in 0u64..200) {
        let m = threshold_metrics::<f64>(&ConfusionMatrix::new(tp, fp, tn, fn_));
        prop_assume!(m.precision > 0.0 && m.sensitivity > 0.0);
        let lo = m.precision.min(m.sensitivity);
        let hi = m.precision.max(m.sensitivity);
        prop_assert!(m.f1 >= lo - 1e-12 && m.f1 <= hi + 1e-12);
    }

    #[test]
    fn hard_label_log_loss_identity(n in 1usize..300, error_every in 1usize..10) {
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
        let preds: Vec<f64> = labels
            .iter()
            .enumerate()
            .map(|(i, &y)| if i % error_every == 0 { f64::from(1 - y) } else { f64::from(y) })
            .collect();
        let wrong = (0..n).filter(|i| i % error_every == 0).count();
        let er = wrong as f64 / n as f64;
        let eps = 1e-15f64;
        let ll = log_loss(&labels, &preds, eps).unwrap();
        let direct = er * ((1.0 - eps) / eps).ln() - (1.0 - er) * (1.0 - eps).ln();
        prop_assert!((ll - direct).abs() < 1e-9, "ll {ll} direct {direct}");
    }

    #[test]
    fn confusion_counts_partition_the_rows(raw in proptest::collection::vec((0u8..2, 0u8..2), 1..100)) {
        let labels: Vec<u8> = raw.iter().map(|(y, _)| *y).collect();
        let preds: Vec<u8> = raw.iter().map(|(_, p)| *p).collect();
        let cm = confusion(&labels, &preds).unwrap();
        prop_assert_eq!(cm.total() as usize, raw.len());
    }
}
