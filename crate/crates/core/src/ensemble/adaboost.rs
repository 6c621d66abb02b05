//! Discrete AdaBoost over decision stumps. Labels are remapped to -1/+1;
//! each stage fits a weighted stump, earns a stage weight
//! alpha = ln((1-e)/e)/2, and reweights the sample so mistakes matter more.
//! A stage with weighted error >= 1/2 stops fitting before being added; a
//! perfect stage is added with a capped alpha and ends fitting.

use serde::{Deserialize, Serialize};

use crate::ensemble::check_binary_training_set;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::tree::{
    fit_tree, Criterion, DecisionTree, MaxFeatures, ThresholdMode, TreeConfig, TreeTargets,
};

const EPSILON_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaBoostConfig {
    pub n_stages: usize,
    /// Depth of each weak learner; 1 is the classic stump.
    pub max_depth: usize,
    pub seed: u64,
}

impl AdaBoostConfig {
    pub fn default_with_seed(seed: u64) -> Self {
        Self { n_stages: 50, max_depth: 1, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel<S> {
    pub stumps: Vec<DecisionTree<S>>,
    pub alphas: Vec<S>,
    pub config: AdaBoostConfig,
}

fn hard_label<S: Scalar>(tree: &DecisionTree<S>, row: &[S]) -> Result<usize> {
    Ok(match tree.predict_distribution(row)?.as_slice() {
        [p0, p1, ..] => usize::from(p1 > p0),
        _ => 0,
    })
}

pub fn fit_adaboost<S: Scalar>(
    features: &Matrix<S>,
    labels: &[u8],
    config: AdaBoostConfig,
) -> Result<AdaBoostModel<S>> {
    check_binary_training_set(labels)?;
    if features.n_rows() != labels.len() {
        return Err(Error::Shape("features and labels must have equal length".into()));
    }
    let n = labels.len();
    let classes: Vec<usize> = labels.iter().map(|&y| y as usize).collect();
    let mut weights = vec![S::one() / S::from_count(n); n];
    let mut stumps = Vec::new();
    let mut alphas: Vec<S> = Vec::new();

    for stage in 0..config.n_stages {
        let tree_config = TreeConfig {
            criterion: Criterion::Gini,
            max_depth: Some(config.max_depth),
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            threshold_mode: ThresholdMode::Best,
            seed: derive_seed(config.seed, stage as u64),
        };
        let stump = fit_tree(features, &TreeTargets::Classes(&classes), &weights, &tree_config)?;

        let mut predictions = Vec::with_capacity(n);
        let mut error = S::zero();
        for i in 0..n {
            let h = hard_label(&stump, features.row(i))?;
            if h != classes[i] {
                error = error + weights[i];
            }
            predictions.push(h);
        }

        if error >= S::half() {
            break;
        }
        if error <= S::zero() {
            // perfect stage: cap the otherwise-infinite alpha, keep it, stop
            let floor = S::cast(EPSILON_FLOOR);
            alphas.push(S::half() * ((S::one() - floor) / floor).ln());
            stumps.push(stump);
            break;
        }

        let alpha = S::half() * ((S::one() - error) / error).ln();
        for i in 0..n {
            // +- alpha in exponent: up-weight mistakes, down-weight hits
            let factor = if predictions[i] == classes[i] { (-alpha).exp() } else { alpha.exp() };
            weights[i] = weights[i] * factor;
        }
        let total: S = weights.iter().copied().sum();
        for w in &mut weights {
            *w = *w / total;
        }
        stumps.push(stump);
        alphas.push(alpha);
    }

    Ok(AdaBoostModel { stumps, alphas, config })
}

impl<S: Scalar> AdaBoostModel<S> {
    /// P(1) = (sum of alphas voting class 1) / (sum of all alphas);
    /// 0.5 when there are no stages.
    pub fn predict_proba(&self, rows: &Matrix<S>) -> Result<Vec<[S; 2]>> {
        let total: S = self.alphas.iter().copied().sum();
        let mut out = Vec::with_capacity(rows.n_rows());
        for i in 0..rows.n_rows() {
            let p1 = if total > S::zero() {
                let mut voted = S::zero();
                for (stump, &alpha) in self.stumps.iter().zip(&self.alphas) {
                    if hard_label(stump, rows.row(i))? == 1 {
                        voted = voted + alpha;
                    }
                }
                voted / total
            } else {
                S::half()
            };
            out.push([S::one() - p1, p1]);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(vals: &[f64]) -> Matrix<f64> {
        Matrix::from_rows(vals.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn perfect_stump_means_one_stage() {
        let x = matrix(&[0.0, 1.0, 2.0, 3.0]);
        let y = [0, 0, 1, 1];
        let model = fit_adaboost(&x, &y, AdaBoostConfig::default_with_seed(0)).unwrap();
        assert_eq!(model.stumps.len(), 1);
        let p = model.predict_proba(&x).unwrap();
        for (p, &y) in p.iter().zip(&y) {
            assert_eq!(u8::from(p[1] >= 0.5), y);
        }
    }

    // One interior noise point: the best stump splits at 1.5, predicts left
    // negative / right positive, and misclassifies only the noise point at
    // 2.5, so the first round has error 0.2 and alpha = ln(4)/2.
    #[test]
    fn first_round_matches_hand_computation() {
        let x = matrix(&[0.0, 1.0, 2.0, 3.0, 2.5]);
        let y = [0, 0, 1, 1, 0];
        let model = fit_adaboost(&x, &y, AdaBoostConfig::default_with_seed(0)).unwrap();
        assert!(!model.alphas.is_empty());
        let expected = 0.5 * 4.0f64.ln();
        assert!(
            (model.alphas[0] - expected).abs() < 1e-12,
            "alpha_1 = {}, expected {expected}",
            model.alphas[0]
        );
        match &model.stumps[0].nodes[0] {
            crate::tree::Node::Internal { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            _ => panic!("first stump should split"),
        }
    }

    #[test]
    fn error_half_halts_without_adding() {
        // any stump on this data errs on exactly half the weight
        let x = matrix(&[0.0, 1.0]);
        let y = [1, 0];
        // feature order makes the only candidate stump wrong on one of two:
        // error 0.5 exactly, so no stage is kept
        let model = fit_adaboost(&x, &y, AdaBoostConfig::default_with_seed(0)).unwrap();
        // threshold 0.5 separates perfectly here, so instead rig it with a
        // truly symmetric-contradiction set
        let x2 = matrix(&[0.0, 0.0, 1.0, 1.0]);
        let y2 = [0, 1, 0, 1];
        let model2 = fit_adaboost(&x2, &y2, AdaBoostConfig::default_with_seed(0)).unwrap();
        assert!(model2.stumps.is_empty());
        for p in model2.predict_proba(&x2).unwrap() {
            assert_eq!(p, [0.5, 0.5]);
        }
        // and the separable pair from above trains fine
        assert_eq!(model.stumps.len(), 1);
    }

    #[test]
    fn weights_stay_normalized_and_mistakes_gain_weight() {
        let x = matrix(&[0.0, 1.0, 2.0, 3.0, 2.5]);
        let y = [0, 0, 1, 1, 0];
        // reproduce the first round by hand to check the weight law
        let model = fit_adaboost(&x, &y, AdaBoostConfig::default_with_seed(0)).unwrap();
        assert!(model.stumps.len() >= 2, "noise point forces several stages");
        // after round 1: wrong row weight 0.2*e^alpha = 0.4, right rows
        // 0.2*e^-alpha = 0.1, normalized to 0.5 and 0.125
        let alpha = model.alphas[0];
        let wrong = 0.2 * alpha.exp();
        let right = 0.2 * (-alpha).exp();
        let total = wrong + 4.0 * right;
        assert!((wrong / total - 0.5).abs() < 1e-12);
        assert!((right / total - 0.125).abs() < 1e-12);
    }

    #[test]
    fn single_stage_vote_is_all_or_nothing() {
        let x = matrix(&[0.0, 1.0, 2.0, 3.0]);
        let y = [0, 0, 1, 1];
        let model = fit_adaboost(&x, &y, AdaBoostConfig::default_with_seed(0)).unwrap();
        assert_eq!(model.stumps.len(), 1);
        let p = model.predict_proba(&matrix(&[3.0])).unwrap();
        assert_eq!(p[0], [0.0, 1.0]);
        let p = model.predict_proba(&matrix(&[0.0])).unwrap();
        assert_eq!(p[0], [1.0, 0.0]);
    }

    #[test]
    fn single_class_rejected() {
        let x = matrix(&[0.0, 1.0]);
        assert!(fit_adaboost(&x, &[1, 1], AdaBoostConfig::default_with_seed(0)).is_err());
    }
}
