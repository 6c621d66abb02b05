//! Second-order regularized boosting. Per stage: gradients g = p - y and
//! hessians h = p(1-p) drive splits through the gain
//! [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)]/2 - gamma,
//! and every leaf takes the Newton weight -G/(H+lambda). Splits whose gain
//! is not strictly positive are rejected.

use serde::{Deserialize, Serialize};

use crate::ensemble::{check_binary_training_set, prior_log_odds};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::derive_seed;
use crate::scalar::{sigmoid, Scalar};
use crate::tree::{
    fit_tree, Criterion, DecisionTree, MaxFeatures, ThresholdMode, TreeConfig, TreeTargets,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XgbConfig<S> {
    pub n_stages: usize,
    pub learning_rate: S,
    /// Ridge regularizer on leaf weights.
    pub lambda: S,
    /// Flat penalty per split.
    pub gamma: S,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl<S: Scalar> XgbConfig<S> {
    pub fn default_with_seed(seed: u64) -> Self {
        Self {
            n_stages: 100,
            learning_rate: S::cast(0.3),
            lambda: S::one(),
            gamma: S::zero(),
            max_depth: Some(3),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XgbModel<S> {
    pub initial_score: S,
    pub stages: Vec<DecisionTree<S>>,
    pub config: XgbConfig<S>,
}

pub fn fit_xgb<S: Scalar>(
    features: &Matrix<S>,
    labels: &[u8],
    config: XgbConfig<S>,
) -> Result<XgbModel<S>> {
    check_binary_training_set(labels)?;
    if features.n_rows() != labels.len() {
        return Err(Error::Shape("features and labels must have equal length".into()));
    }
    if config.lambda < S::zero() || config.gamma < S::zero() {
        return Err(Error::Parameter("lambda and gamma must be nonnegative".into()));
    }
    if !(config.learning_rate > S::zero() && config.learning_rate <= S::one()) {
        return Err(Error::Parameter("learning rate must lie in (0, 1]".into()));
    }
    let n = labels.len();
    let weights = vec![S::one(); n];
    let initial_score = prior_log_odds::<S>(labels);
    let mut scores = vec![initial_score; n];
    let mut stages = Vec::with_capacity(config.n_stages);

    for stage in 0..config.n_stages {
        let mut grad = Vec::with_capacity(n);
        let mut hess = Vec::with_capacity(n);
        for (&y, &f) in labels.iter().zip(&scores) {
            let p = sigmoid(f);
            grad.push(p - S::from_count(y as usize));
            hess.push(p * (S::one() - p));
        }
        let tree_config = TreeConfig {
            criterion: Criterion::SecondOrder { lambda: config.lambda, gamma: config.gamma },
            max_depth: config.max_depth,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            threshold_mode: ThresholdMode::Best,
            seed: derive_seed(config.seed, stage as u64),
        };
        let tree = fit_tree(
            features,
            &TreeTargets::GradHess { grad: &grad, hess: &hess },
            &weights,
            &tree_config,
        )?;
        for i in 0..n {
            scores[i] = scores[i] + config.learning_rate * tree.predict_value(features.row(i))?;
        }
        stages.push(tree);
    }
    Ok(XgbModel { initial_score, stages, config })
}

impl<S: Scalar> XgbModel<S> {
    pub fn decision_value(&self, row: &[S]) -> Result<S> {
        let mut f = self.initial_score;
        for stage in &self.stages {
            f = f + self.config.learning_rate * stage.predict_value(row)?;
        }
        Ok(f)
    }

    pub fn predict_proba(&self, rows: &Matrix<S>) -> Result<Vec<[S; 2]>> {
        (0..rows.n_rows())
            .map(|i| {
                let p1 = sigmoid(self.decision_value(rows.row(i))?);
                Ok([S::one() - p1, p1])
            })
            .collect()
    }
}
