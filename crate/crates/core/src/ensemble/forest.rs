//! Random forest and extra trees. Both soft-vote: the predicted distribution
//! is the mean of the per-tree leaf distributions. The forest kind decides
//! row sampling (bootstrap vs full sample) and threshold selection
//! (exhaustive vs one uniform draw per feature).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::check_binary_training_set;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_from};
use crate::scalar::Scalar;
use crate::tree::{
    fit_tree_on, Criterion, DecisionTree, MaxFeatures, ThresholdMode, TreeConfig, TreeTargets,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestKind {
    RandomForest,
    ExtraTrees,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig<S> {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub criterion: Criterion<S>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl<S: Scalar> ForestConfig<S> {
    pub fn random_forest_default(seed: u64) -> Self {
        Self {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            seed,
        }
    }

    pub fn extra_trees_default(seed: u64) -> Self {
        Self { bootstrap: false, ..Self::random_forest_default(seed) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<S> {
    pub trees: Vec<DecisionTree<S>>,
    pub kind: ForestKind,
    pub config: ForestConfig<S>,
}

fn fit_forest<S: Scalar>(
    features: &Matrix<S>,
    labels: &[u8],
    kind: ForestKind,
    config: ForestConfig<S>,
) -> Result<ForestModel<S>> {
    check_binary_training_set(labels)?;
    if features.n_rows() != labels.len() {
        return Err(Error::Shape("features and labels must have equal length".into()));
    }
    if config.n_trees == 0 {
        return Err(Error::Parameter("a forest needs at least one tree".into()));
    }
    let classes: Vec<usize> = labels.iter().map(|&y| y as usize).collect();
    let weights = vec![S::one(); labels.len()];
    let threshold_mode = match kind {
        ForestKind::RandomForest => ThresholdMode::Best,
        ForestKind::ExtraTrees => ThresholdMode::Random,
    };

    let trees: Result<Vec<DecisionTree<S>>> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let tree_config = TreeConfig {
                criterion: config.criterion,
                max_depth: config.max_depth,
                min_samples_split: config.min_samples_split,
                min_samples_leaf: config.min_samples_leaf,
                max_features: config.max_features,
                threshold_mode,
                seed: derive_seed(config.seed, 2 * t as u64),
            };
            let rows: Vec<usize> = if config.bootstrap {
                let mut rng = rng_from(derive_seed(config.seed, 2 * t as u64 + 1));
                (0..labels.len()).map(|_| rng.random_range(0..labels.len())).collect()
            } else {
                (0..labels.len()).collect()
            };
            fit_tree_on(features, &TreeTargets::Classes(&classes), &weights, &rows, &tree_config)
        })
        .collect();
    Ok(ForestModel { trees: trees?, kind, config })
}

/// Bootstrap-sampled forest with exhaustive split search per node.
pub fn fit_random_forest<S: Scalar>(
    features: &Matrix<S>,
    labels: &[u8],
    config: ForestConfig<S>,
) -> Result<ForestModel<S>> {
    fit_forest(features, labels, ForestKind::RandomForest, config)
}

/// Extremely randomized trees: full sample per tree, one uniform threshold
/// draw per candidate feature. `bootstrap` in the config is ignored.
pub fn fit_extra_trees<S: Scalar>(
    features: &Matrix<S>,
    labels: &[u8],
    config: ForestConfig<S>,
) -> Result<ForestModel<S>> {
    let config = ForestConfig { bootstrap: false, ..config };
    fit_forest(features, labels, ForestKind::ExtraTrees, config)
}

impl<S: Scalar> ForestModel<S> {
    /// Soft vote: mean of per-tree leaf distributions.
    pub fn predict_proba(&self, rows: &Matrix<S>) -> Result<Vec<[S; 2]>> {
        let n_trees = S::from_count(self.trees.len());
        let mut out = Vec::with_capacity(rows.n_rows());
        for i in 0..rows.n_rows() {
            let mut p = [S::zero(); 2];
            for tree in &self.trees {
                let dist = tree.predict_distribution(rows.row(i))?;
                p[0] = p[0] + dist[0];
                p[1] = p[1] + dist[1];
            }
            out.push([p[0] / n_trees, p[1] / n_trees]);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::fit_tree;

    fn blobs(n_per_class: usize) -> (Matrix<f64>, Vec<u8>) {
        // two well-separated clusters on a diagonal
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_per_class {
            let jitter = (i as f64 * 0.37) % 1.0;
            rows.push(vec![jitter, jitter * 0.5]);
            labels.push(0);
            rows.push(vec![4.0 + jitter, 3.0 + jitter * 0.5]);
            labels.push(1);
        }
        (Matrix::from_rows(rows).unwrap(), labels)
    }

    fn training_accuracy(p: &[[f64; 2]], labels: &[u8]) -> f64 {
        let hits =
            p.iter().zip(labels).filter(|(p, &y)| u8::from(p[1] >= 0.5) == y).count();
        hits as f64 / labels.len() as f64
    }

    #[test]
    fn single_tree_no_bootstrap_equals_cart() {
        let (x, y) = blobs(10);
        let config = ForestConfig {
            n_trees: 1,
            max_features: MaxFeatures::All,
            bootstrap: false,
            ..ForestConfig::random_forest_default(5)
        };
        let forest = fit_random_forest(&x, &y, config).unwrap();
        let classes: Vec<usize> = y.iter().map(|&v| v as usize).collect();
        let tree_config = TreeConfig {
            seed: derive_seed(5, 0),
            ..TreeConfig::default()
        };
        let cart =
            fit_tree(&x, &TreeTargets::Classes(&classes), &vec![1.0; y.len()], &tree_config)
                .unwrap();
        for i in 0..x.n_rows() {
            assert_eq!(
                forest.trees[0].predict_distribution(x.row(i)).unwrap(),
                cart.predict_distribution(x.row(i)).unwrap()
            );
        }
    }

    #[test]
    fn forest_separates_the_fixture() {
        let (x, y) = blobs(10);
        let config = ForestConfig { n_trees: 25, ..ForestConfig::random_forest_default(1) };
        let forest = fit_random_forest(&x, &y, config).unwrap();
        let p = forest.predict_proba(&x).unwrap();
        assert_eq!(training_accuracy(&p, &y), 1.0);
    }

    #[test]
    fn probabilities_are_normalized() {
        let (x, y) = blobs(8);
        let forest =
            fit_random_forest(&x, &y, ForestConfig::random_forest_default(3)).unwrap();
        for p in forest.predict_proba(&x).unwrap() {
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
            assert!(p[0] >= 0.0 && p[1] >= 0.0);
        }
    }

    #[test]
    fn extra_trees_are_reproducible() {
        let (x, y) = blobs(10);
        let config = ForestConfig {
            n_trees: 5,
            max_features: MaxFeatures::Count(1),
            ..ForestConfig::extra_trees_default(11)
        };
        let a = fit_extra_trees(&x, &y, config.clone()).unwrap();
        let b = fit_extra_trees(&x, &y, config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn extra_trees_separate_the_fixture() {
        let (x, y) = blobs(10);
        let config = ForestConfig { n_trees: 25, ..ForestConfig::extra_trees_default(2) };
        let forest = fit_extra_trees(&x, &y, config).unwrap();
        let p = forest.predict_proba(&x).unwrap();
        assert_eq!(training_accuracy(&p, &y), 1.0);
        assert_eq!(forest.kind, ForestKind::ExtraTrees);
        assert!(!forest.config.bootstrap);
    }

    #[test]
    fn pure_labels_give_unanimous_leaves() {
        // both classes must be present to fit, so use a nearly-pure set and
        // query deep inside the majority cluster
        let x = Matrix::from_rows(vec![vec![0.0], vec![0.1], vec![0.2], vec![9.0]]).unwrap();
        let y = vec![1, 1, 1, 0];
        let config = ForestConfig { n_trees: 10, ..ForestConfig::extra_trees_default(0) };
        let forest = fit_extra_trees(&x, &y, config).unwrap();
        let p = forest.predict_proba(&Matrix::from_rows(vec![vec![0.05]]).unwrap()).unwrap();
        assert_eq!(p[0], [0.0, 1.0]);
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(vec![vec![1.0], vec![2.0]]).unwrap();
        let err =
            fit_random_forest(&x, &[1, 1], ForestConfig::random_forest_default(0)).unwrap_err();
        assert!(matches!(err, Error::SingleClass(_)));
    }
}
