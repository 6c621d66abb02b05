//! Linear classifiers trained by deterministic full-batch descent: logistic
//! regression on mean log-loss, and a linear SVC on mean hinge loss. Both
//! start from zero weights, so a seed changes nothing; it is accepted anyway
//! to keep the fit interface uniform across learners.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{sigmoid, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearKind {
    Logistic,
    Svc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig<S> {
    pub epochs: usize,
    pub learning_rate: S,
    pub l2: S,
    pub seed: u64,
}

impl<S: Scalar> Default for LinearConfig<S> {
    fn default() -> Self {
        Self { epochs: 500, learning_rate: S::cast(0.1), l2: S::cast(1e-4), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<S> {
    pub weights: Vec<S>,
    pub bias: S,
    pub kind: LinearKind,
    pub config: LinearConfig<S>,
}

impl<S: Scalar> LinearModel<S> {
    pub fn decision_value(&self, row: &[S]) -> S {
        self.weights.iter().zip(row).map(|(&w, &x)| w * x).sum::<S>() + self.bias
    }

    /// P(1) = sigmoid of the decision value. For the SVC this is an
    /// uncalibrated pseudo-probability of the raw margin.
    pub fn predict_proba(&self, rows: &Matrix<S>) -> Result<Vec<[S; 2]>> {
        if rows.n_cols() != self.weights.len() {
            return Err(Error::Model(format!(
                "rows have {} features, model has {}",
                rows.n_cols(),
                self.weights.len()
            )));
        }
        Ok(rows
            .rows_iter()
            .map(|row| {
                let p1 = sigmoid(self.decision_value(row));
                [S::one() - p1, p1]
            })
            .collect())
    }
}

fn check_two_classes(labels: &[u8]) -> Result<()> {
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::SingleClass("linear fits need both classes present".into()));
    }
    Ok(())
}

fn check_shapes<S: Scalar>(features: &Matrix<S>, labels: &[u8]) -> Result<()> {
    if features.n_rows() != labels.len() {
        return Err(Error::Shape("features and labels must have equal length".into()));
    }
    if features.n_rows() == 0 {
        return Err(Error::Shape("cannot fit on zero rows".into()));
    }
    Ok(())
}

/// Full-batch gradient descent on mean log-loss + (l2/2)|w|^2, zero init.
/// The bias is not regularized.
pub fn fit_logistic_regression<S: Scalar>(
    features: &Matrix<S>,
    labels: &[u8],
    config: LinearConfig<S>,
) -> Result<LinearModel<S>> {
    check_shapes(features, labels)?;
    check_two_classes(labels)?;
    let n = S::from_count(features.n_rows());
    let d = features.n_cols();
    let mut weights = vec![S::zero(); d];
    let mut bias = S::zero();
    let mut grad = vec![S::zero(); d];
    for _ in 0..config.epochs {
        for (g, &w) in grad.iter_mut().zip(&weights) {
            *g = config.l2 * w;
        }
        let mut grad_bias = S::zero();
        for (row, &y) in features.rows_iter().zip(labels) {
            let z = weights.iter().zip(row).map(|(&w, &x)| w * x).sum::<S>() + bias;
            let err = (sigmoid(z) - S::from_count(y as usize)) / n;
            for (g, &x) in grad.iter_mut().zip(row) {
                *g = *g + err * x;
            }
            grad_bias = grad_bias + err;
        }
        for (w, &g) in weights.iter_mut().zip(&grad) {
            *w = *w - config.learning_rate * g;
        }
        bias = bias - config.learning_rate * grad_bias;
    }
    Ok(LinearModel { weights, bias, kind: LinearKind::Logistic, config })
}

/// Full-batch subgradient descent on mean hinge loss + (l2/2)|w|^2 with
/// labels remapped to -1/+1, zero init.
pub fn fit_linear_svc<S: Scalar>(
    features: &Matrix<S>,
    labels: &[u8],
    config: LinearConfig<S>,
) -> Result<LinearModel<S>> {
    check_shapes(features, labels)?;
    check_two_classes(labels)?;
    let n = S::from_count(features.n_rows());
    let d = features.n_cols();
    let signed: Vec<S> =
        labels.iter().map(|&y| if y == 1 { S::one() } else { -S::one() }).collect();
    let mut weights = vec![S::zero(); d];
    let mut bias = S::zero();
    let mut grad = vec![S::zero(); d];
    for _ in 0..config.epochs {
        for (g, &w) in grad.iter_mut().zip(&weights) {
            *g = config.l2 * w;
        }
        let mut grad_bias = S::zero();
        for (row, &y) in features.rows_iter().zip(&signed) {
            let z = weights.iter().zip(row).map(|(&w, &x)| w * x).sum::<S>() + bias;
            if y * z < S::one() {
                for (g, &x) in grad.iter_mut().zip(row) {
                    *g = *g - y * x / n;
                }
                grad_bias = grad_bias - y / n;
            }
        }
        for (w, &g) in weights.iter_mut().zip(&grad) {
            *w = *w - config.learning_rate * g;
        }
        bias = bias - config.learning_rate * grad_bias;
    }
    Ok(LinearModel { weights, bias, kind: LinearKind::Svc, config })
}
