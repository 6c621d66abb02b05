//! Gradient boosting for binary log-loss. Stages are variance-split
//! regression trees fitted to pseudo-residuals y - sigmoid(F); each fitted
//! leaf is then replaced by the Newton step sum(r) / sum(p(1-p)) over its
//! members, LogitBoost style.

use serde::{Deserialize, Serialize};

use crate::ensemble::{check_binary_training_set, prior_log_odds};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::derive_seed;
use crate::scalar::{sigmoid, Scalar};
use crate::tree::{
    fit_tree, Criterion, DecisionTree, LeafValue, MaxFeatures, ThresholdMode, TreeConfig,
    TreeTargets,
};

const NEWTON_DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmConfig<S> {
    pub n_stages: usize,
    pub learning_rate: S,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl<S: Scalar> GbmConfig<S> {
    pub fn default_with_seed(seed: u64) -> Self {
        Self { n_stages: 100, learning_rate: S::cast(0.1), max_depth: Some(3), seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel<S> {
    /// Prior log-odds ln(pos/neg).
    pub initial_score: S,
    pub stages: Vec<DecisionTree<S>>,
    pub config: GbmConfig<S>,
}

pub fn fit_gbm<S: Scalar>(
    features: &Matrix<S>,
    labels: &[u8],
    config: GbmConfig<S>,
) -> Result<GbmModel<S>> {
    check_binary_training_set(labels)?;
    if features.n_rows() != labels.len() {
        return Err(Error::Shape("features and labels must have equal length".into()));
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
        let probs: Vec<S> = scores.iter().map(|&f| sigmoid(f)).collect();
        let residuals: Vec<S> = labels
            .iter()
            .zip(&probs)
            .map(|(&y, &p)| S::from_count(y as usize) - p)
            .collect();

        let tree_config = TreeConfig {
            criterion: Criterion::Variance,
            max_depth: config.max_depth,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            threshold_mode: ThresholdMode::Best,
            seed: derive_seed(config.seed, stage as u64),
        };
        let mut tree =
            fit_tree(features, &TreeTargets::Values(&residuals), &weights, &tree_config)?;

        // replace each leaf mean with the Newton step over its members
        let mut numerator = vec![S::zero(); tree.nodes.len()];
        let mut denominator = vec![S::zero(); tree.nodes.len()];
        let mut leaf_of = Vec::with_capacity(n);
        for i in 0..n {
            let leaf = tree.leaf_index_for(features.row(i))?;
            numerator[leaf] = numerator[leaf] + residuals[i];
            denominator[leaf] = denominator[leaf] + probs[i] * (S::one() - probs[i]);
            leaf_of.push(leaf);
        }
        let floor = S::cast(NEWTON_DENOMINATOR_FLOOR);
        for leaf in 0..tree.nodes.len() {
            if matches!(tree.nodes[leaf], crate::tree::Node::Leaf(_)) {
                let value = if denominator[leaf] < floor {
                    S::zero()
                } else {
                    numerator[leaf] / denominator[leaf]
                };
                tree.set_leaf_value(leaf, LeafValue::Value(value));
            }
        }

        for (i, &leaf) in leaf_of.iter().enumerate() {
            scores[i] = scores[i] + config.learning_rate * tree.leaf_value_at(leaf).value()?;
        }
        stages.push(tree);
    }
    Ok(GbmModel { initial_score, stages, config })
}

impl<S: Scalar> GbmModel<S> {
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
