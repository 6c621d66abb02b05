//! Binary-classification evaluation: confusion matrix, the threshold metrics
//! derived from it, Matthews correlation, log-loss, ROC curves and AUC, and
//! the eight-column evaluation row emitted by reports.
//!
//! Two reporting conventions exist side by side. The default computes ROC-AUC
//! and log-loss from predicted probabilities. "Paper" mode computes both from
//! hard 0/1 predictions instead, which some published comparisons use; under
//! that convention ROC-AUC collapses to (sensitivity+specificity)/2 and
//! log-loss to error_rate * ln(1/epsilon).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_LOG_LOSS_EPSILON: f64 = 1e-15;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Counts of the four binary outcomes; class 1 is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self {
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// The five metrics read directly off a confusion matrix. `degenerate` is set
/// when any metric hit a zero denominator and was reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics<S> {
    pub accuracy: S,
    pub precision: S,
    pub sensitivity: S,
    pub specificity: S,
    pub f1: S,
    pub degenerate: bool,
}

/// Count the four outcomes. Both inputs must be the same length and contain
/// only 0 and 1.
pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(Error::Shape(format!(
            "labels ({}) and predictions ({}) differ in length",
            labels.len(),
            predictions.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Shape("cannot build a confusion matrix from zero rows".into()));
    }
    let mut cm = ConfusionMatrix::new(0, 0, 0, 0);
    for (i, (&y, &p)) in labels.iter().zip(predictions).enumerate() {
        match (y, p) {
            (1, 1) => cm.true_positives += 1,
            (0, 1) => cm.false_positives += 1,
            (0, 0) => cm.true_negatives += 1,
            (1, 0) => cm.false_negatives += 1,
            _ => {
                return Err(Error::Shape(format!(
                    "non-binary value at position {i}: label {y}, prediction {p}"
                )))
            }
        }
    }
    Ok(cm)
}

/// Accuracy, precision, sensitivity, specificity, F1. A zero denominator
/// makes the affected metric 0 and sets the degenerate flag, so report rows
/// always come out complete.
pub fn threshold_metrics<S: Scalar>(cm: &ConfusionMatrix) -> ThresholdMetrics<S> {
    let mut degenerate = false;
    let mut ratio = |num: u64, den: u64| -> S {
        if den == 0 {
            degenerate = true;
            S::zero()
        } else {
            S::from_f64(num as f64).unwrap() / S::from_f64(den as f64).unwrap()
        }
    };
    let tp = cm.true_positives;
    let fp = cm.false_positives;
    let tn = cm.true_negatives;
    let fn_ = cm.false_negatives;

    let accuracy = ratio(tp + tn, cm.total());
    let precision = ratio(tp, tp + fp);
    let sensitivity = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    let f1 = if precision + sensitivity > S::zero() {
        S::two() * precision * sensitivity / (precision + sensitivity)
    } else {
        degenerate = true;
        S::zero()
    };
    ThresholdMetrics { accuracy, precision, sensitivity, specificity, f1, degenerate }
}

/// Matthews correlation coefficient. The numerator is exact in i128; the
/// denominator multiplies per-factor square roots so large counts cannot
/// overflow. Any zero factor yields 0 by convention.
pub fn mcc<S: Scalar>(cm: &ConfusionMatrix) -> S {
    let tp = cm.true_positives;
    let fp = cm.false_positives;
    let tn = cm.true_negatives;
    let fn_ = cm.false_negatives;
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if factors.iter().any(|&f| f == 0) {
        return S::zero();
    }
    let num = (tp as i128) * (tn as i128) - (fp as i128) * (fn_ as i128);
    let den = (factors[0] as f64 * factors[1] as f64).sqrt()
        * (factors[2] as f64 * factors[3] as f64).sqrt();
    S::cast(num as f64 / den)
}

/// Mean negative log-likelihood with probabilities clipped to
/// [epsilon, 1-epsilon].
pub fn log_loss<S: Scalar>(labels: &[u8], p1: &[S], epsilon: S) -> Result<S> {
    if labels.len() != p1.len() {
        return Err(Error::Shape(format!(
            "labels ({}) and probabilities ({}) differ in length",
            labels.len(),
            p1.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Shape("log-loss of zero rows".into()));
    }
    if epsilon <= S::zero() || epsilon >= S::half() {
        return Err(Error::Parameter(format!("epsilon must lie in (0, 0.5), got {epsilon}")));
    }
    let mut sum = S::zero();
    for (&y, &p) in labels.iter().zip(p1) {
        // probability assigned to the true class, clipped; complementing
        // before the clip keeps the two classes numerically symmetric
        let q = if y == 1 { p } else { S::one() - p };
        let q = q.max(epsilon).min(S::one() - epsilon);
        sum = sum + -q.ln();
    }
    Ok(sum / S::from_count(labels.len()))
}

/// ROC curve as (FPR, TPR) points. `points[0]` is (0,0); `points[i]` for
/// i >= 1 is the operating point of `thresholds[i-1]` (predict positive when
/// score >= threshold). Equal scores collapse into a single threshold step,
/// and the final point is always (1,1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve<S> {
    pub points: Vec<(S, S)>,
    pub thresholds: Vec<S>,
}

pub fn roc_curve<S: Scalar>(labels: &[u8], scores: &[S]) -> Result<RocCurve<S>> {
    if labels.len() != scores.len() {
        return Err(Error::Shape(format!(
            "labels ({}) and scores ({}) differ in length",
            labels.len(),
            scores.len()
        )));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass(
            "ROC needs both classes present in the labels".into(),
        ));
    }

    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("scores must not be NaN"));

    let pos_total = S::from_count(pos);
    let neg_total = S::from_count(neg);
    let mut points = vec![(S::zero(), S::zero())];
    let mut thresholds = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // consume the whole group of equal scores as one step
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        thresholds.push(threshold);
        points.push((S::from_count(fp) / neg_total, S::from_count(tp) / pos_total));
    }
    Ok(RocCurve { points, thresholds })
}

/// Trapezoidal area under the curve.
pub fn auc<S: Scalar>(curve: &RocCurve<S>) -> S {
    let mut area = S::zero();
    for pair in curve.points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        area = area + (x1 - x0) * (y0 + y1) * S::half();
    }
    area
}

/// Which convention `evaluate_all` uses for the ROC and log-loss columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricsMode {
    /// ROC-AUC of the probabilities; log-loss of the probabilities.
    #[default]
    Default,
    /// Both computed from hard 0/1 predictions.
    Paper,
}

/// One report row: the eight metrics for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow<S> {
    pub model_name: String,
    pub accuracy: S,
    pub prc: S,
    pub sensitivity: S,
    pub specificity: S,
    pub f1: S,
    pub roc: S,
    pub log_loss: S,
    pub mcc: S,
    pub degenerate: bool,
}

/// Threshold the probabilities (ties predict positive).
pub fn hard_predictions<S: Scalar>(p1: &[S], threshold: S) -> Vec<u8> {
    p1.iter().map(|&p| u8::from(p >= threshold)).collect()
}

/// Fill a full evaluation row from true labels and predicted P(class=1).
pub fn evaluate_all<S: Scalar>(
    model_name: &str,
    labels: &[u8],
    p1: &[S],
    threshold: S,
    mode: MetricsMode,
) -> Result<EvaluationRow<S>> {
    let hard = hard_predictions(p1, threshold);
    let cm = confusion(labels, &hard)?;
    let tm = threshold_metrics::<S>(&cm);
    let eps = S::cast(DEFAULT_LOG_LOSS_EPSILON);
    let (roc, log_loss) = match mode {
        MetricsMode::Default => {
            (auc(&roc_curve(labels, p1)?), self::log_loss(labels, p1, eps)?)
        }
        MetricsMode::Paper => {
            let hard_scores: Vec<S> = hard.iter().map(|&h| S::from_count(h as usize)).collect();
            (auc(&roc_curve(labels, &hard_scores)?), self::log_loss(labels, &hard_scores, eps)?)
        }
    };
    Ok(EvaluationRow {
        model_name: model_name.to_string(),
        accuracy: tm.accuracy,
        prc: tm.precision,
        sensitivity: tm.sensitivity,
        specificity: tm.specificity,
        f1: tm.f1,
        roc,
        log_loss,
        mcc: mcc(&cm),
        degenerate: tm.degenerate,
    })
}
