//! The uniform model layer: one tagged union over every fitted learner, a
//! spec type naming a learner plus its hyperparameters, and the default
//! nine-learner roster. Everything that evaluates or stacks models goes
//! through `TrainedModel::predict_proba`.

use serde::{Deserialize, Serialize};

use crate::baselines::{
    fit_knn, fit_linear_svc, fit_logistic_regression, fit_mlp, KnnModel, LinearConfig,
    LinearModel, MlpConfig, MlpModel,
};
use crate::ensemble::{
    fit_adaboost, fit_extra_trees, fit_gbm, fit_random_forest, fit_xgb, AdaBoostConfig,
    AdaBoostModel, ForestConfig, ForestModel, GbmConfig, GbmModel, XgbConfig, XgbModel,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::stacking::StackedModel;
use crate::tree::{fit_tree, DecisionTree, TreeConfig, TreeTargets};

/// The nine base learners, in roster order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseLearnerKind {
    Rf,
    Mlp,
    Knn,
    Etc,
    Xgb,
    Svc,
    Adb,
    Cart,
    Gbm,
}

pub const ROSTER: [BaseLearnerKind; 9] = [
    BaseLearnerKind::Rf,
    BaseLearnerKind::Mlp,
    BaseLearnerKind::Knn,
    BaseLearnerKind::Etc,
    BaseLearnerKind::Xgb,
    BaseLearnerKind::Svc,
    BaseLearnerKind::Adb,
    BaseLearnerKind::Cart,
    BaseLearnerKind::Gbm,
];

impl BaseLearnerKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaseLearnerKind::Rf => "RF",
            BaseLearnerKind::Mlp => "MLP",
            BaseLearnerKind::Knn => "KNN",
            BaseLearnerKind::Etc => "ETC",
            BaseLearnerKind::Xgb => "XGB",
            BaseLearnerKind::Svc => "SVC",
            BaseLearnerKind::Adb => "ADB",
            BaseLearnerKind::Cart => "CART",
            BaseLearnerKind::Gbm => "GBM",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        ROSTER
            .iter()
            .find(|k| k.name().eq_ignore_ascii_case(name.trim()))
            .copied()
            .ok_or_else(|| Error::Parameter(format!("unknown learner \"{name}\"")))
    }
}

impl std::fmt::Display for BaseLearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Standalone CART hyperparameters (the tree config minus sampling options,
/// which a single deterministic tree does not use).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartModel<S> {
    pub tree: DecisionTree<S>,
    pub config: TreeConfig<S>,
}

/// Hyperparameters for one learner. Each variant carries its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerParams<S> {
    RandomForest(ForestConfig<S>),
    ExtraTrees(ForestConfig<S>),
    AdaBoost(AdaBoostConfig),
    Gbm(GbmConfig<S>),
    Xgb(XgbConfig<S>),
    Knn { k: usize },
    Logistic(LinearConfig<S>),
    Svc(LinearConfig<S>),
    Mlp(MlpConfig<S>),
    Cart(TreeConfig<S>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseLearnerSpec<S> {
    pub kind: BaseLearnerKind,
    pub params: LearnerParams<S>,
}

impl<S: Scalar> BaseLearnerSpec<S> {
    /// Default hyperparameters for a learner kind, seeded.
    pub fn with_defaults(kind: BaseLearnerKind, seed: u64) -> Self {
        let params = match kind {
            BaseLearnerKind::Rf => {
                LearnerParams::RandomForest(ForestConfig::random_forest_default(seed))
            }
            BaseLearnerKind::Etc => {
                LearnerParams::ExtraTrees(ForestConfig::extra_trees_default(seed))
            }
            BaseLearnerKind::Adb => {
                LearnerParams::AdaBoost(AdaBoostConfig::default_with_seed(seed))
            }
            BaseLearnerKind::Gbm => LearnerParams::Gbm(GbmConfig::default_with_seed(seed)),
            BaseLearnerKind::Xgb => LearnerParams::Xgb(XgbConfig::default_with_seed(seed)),
            BaseLearnerKind::Knn => LearnerParams::Knn { k: 5 },
            BaseLearnerKind::Svc => LearnerParams::Svc(LinearConfig { seed, ..Default::default() }),
            BaseLearnerKind::Mlp => LearnerParams::Mlp(MlpConfig { seed, ..Default::default() }),
            BaseLearnerKind::Cart => LearnerParams::Cart(TreeConfig { seed, ..Default::default() }),
        };
        Self { kind, params }
    }

    pub fn seed(&self) -> u64 {
        match &self.params {
            LearnerParams::RandomForest(c) | LearnerParams::ExtraTrees(c) => c.seed,
            LearnerParams::AdaBoost(c) => c.seed,
            LearnerParams::Gbm(c) => c.seed,
            LearnerParams::Xgb(c) => c.seed,
            LearnerParams::Knn { .. } => 0,
            LearnerParams::Logistic(c) | LearnerParams::Svc(c) => c.seed,
            LearnerParams::Mlp(c) => c.seed,
            LearnerParams::Cart(c) => c.seed,
        }
    }

    /// Same hyperparameters, different seed (used for per-fold refits).
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out.params {
            LearnerParams::RandomForest(c) | LearnerParams::ExtraTrees(c) => c.seed = seed,
            LearnerParams::AdaBoost(c) => c.seed = seed,
            LearnerParams::Gbm(c) => c.seed = seed,
            LearnerParams::Xgb(c) => c.seed = seed,
            LearnerParams::Knn { .. } => {}
            LearnerParams::Logistic(c) | LearnerParams::Svc(c) => c.seed = seed,
            LearnerParams::Mlp(c) => c.seed = seed,
            LearnerParams::Cart(c) => c.seed = seed,
        }
        out
    }
}

/// The nine-learner default roster in canonical order, with per-learner
/// seeds derived from one experiment seed.
pub fn default_roster<S: Scalar>(seed: u64) -> Vec<BaseLearnerSpec<S>> {
    ROSTER
        .iter()
        .enumerate()
        .map(|(i, &kind)| BaseLearnerSpec::with_defaults(kind, derive_seed(seed, 101 + i as u64)))
        .collect()
}

/// Any fitted learner, including the stacked ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "", deserialize = ""))]
pub enum TrainedModel<S: Scalar> {
    Cart(CartModel<S>),
    RandomForest(ForestModel<S>),
    ExtraTrees(ForestModel<S>),
    AdaBoost(AdaBoostModel<S>),
    Gbm(GbmModel<S>),
    Xgb(XgbModel<S>),
    Knn(KnnModel<S>),
    Logistic(LinearModel<S>),
    Svc(LinearModel<S>),
    Mlp(MlpModel<S>),
    Stacked(StackedModel<S>),
}

impl<S: Scalar> TrainedModel<S> {
    /// Per-row (P(0), P(1)); entries lie in [0,1] and sum to 1.
    pub fn predict_proba(&self, rows: &Matrix<S>) -> Result<Vec<[S; 2]>> {
        match self {
            TrainedModel::Cart(m) => (0..rows.n_rows())
                .map(|i| {
                    let dist = m.tree.predict_distribution(rows.row(i))?;
                    Ok([dist[0], dist[1]])
                })
                .collect(),
            TrainedModel::RandomForest(m) | TrainedModel::ExtraTrees(m) => m.predict_proba(rows),
            TrainedModel::AdaBoost(m) => m.predict_proba(rows),
            TrainedModel::Gbm(m) => m.predict_proba(rows),
            TrainedModel::Xgb(m) => m.predict_proba(rows),
            TrainedModel::Knn(m) => m.predict_proba(rows),
            TrainedModel::Logistic(m) | TrainedModel::Svc(m) => m.predict_proba(rows),
            TrainedModel::Mlp(m) => m.predict_proba(rows),
            TrainedModel::Stacked(m) => m.predict_proba(rows),
        }
    }

    /// P(1) only, the meta-feature column format.
    pub fn predict_p1(&self, rows: &Matrix<S>) -> Result<Vec<S>> {
        Ok(self.predict_proba(rows)?.into_iter().map(|p| p[1]).collect())
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            TrainedModel::Cart(_) => "CART",
            TrainedModel::RandomForest(_) => "RF",
            TrainedModel::ExtraTrees(_) => "ETC",
            TrainedModel::AdaBoost(_) => "ADB",
            TrainedModel::Gbm(_) => "GBM",
            TrainedModel::Xgb(_) => "XGB",
            TrainedModel::Knn(_) => "KNN",
            TrainedModel::Logistic(_) => "LOGIT",
            TrainedModel::Svc(_) => "SVC",
            TrainedModel::Mlp(_) => "MLP",
            TrainedModel::Stacked(_) => "Stacked Classifier",
        }
    }
}

/// Uniform prediction entry point.
pub fn model_predict_proba<S: Scalar>(
    model: &TrainedModel<S>,
    rows: &Matrix<S>,
) -> Result<Vec<[S; 2]>> {
    model.predict_proba(rows)
}

/// Fit one base learner from its spec.
pub fn fit_base_learner<S: Scalar>(
    spec: &BaseLearnerSpec<S>,
    features: &Matrix<S>,
    labels: &[u8],
) -> Result<TrainedModel<S>> {
    Ok(match &spec.params {
        LearnerParams::RandomForest(c) => {
            TrainedModel::RandomForest(fit_random_forest(features, labels, c.clone())?)
        }
        LearnerParams::ExtraTrees(c) => {
            TrainedModel::ExtraTrees(fit_extra_trees(features, labels, c.clone())?)
        }
        LearnerParams::AdaBoost(c) => TrainedModel::AdaBoost(fit_adaboost(features, labels, *c)?),
        LearnerParams::Gbm(c) => TrainedModel::Gbm(fit_gbm(features, labels, *c)?),
        LearnerParams::Xgb(c) => TrainedModel::Xgb(fit_xgb(features, labels, *c)?),
        LearnerParams::Knn { k } => TrainedModel::Knn(fit_knn(features, labels, *k)?),
        LearnerParams::Logistic(c) => {
            TrainedModel::Logistic(fit_logistic_regression(features, labels, *c)?)
        }
        LearnerParams::Svc(c) => TrainedModel::Svc(fit_linear_svc(features, labels, *c)?),
        LearnerParams::Mlp(c) => TrainedModel::Mlp(fit_mlp(features, labels, *c)?),
        LearnerParams::Cart(c) => {
            let classes: Vec<usize> = labels.iter().map(|&y| y as usize).collect();
            let weights = vec![S::one(); labels.len()];
            let tree = fit_tree(features, &TreeTargets::Classes(&classes), &weights, c)?;
            TrainedModel::Cart(CartModel { tree, config: c.clone() })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roster_is_the_nine_names_in_order() {
        let names: Vec<&str> = ROSTER.iter().map(|k| k.name()).collect();
        assert_eq!(names, ["RF", "MLP", "KNN", "ETC", "XGB", "SVC", "ADB", "CART", "GBM"]);
        let specs = default_roster::<f64>(42);
        assert_eq!(specs.len(), 9);
        let kinds: Vec<BaseLearnerKind> = specs.iter().map(|s| s.kind).collect();
        assert_eq!(kinds.as_slice(), &ROSTER);
    }

    #[test]
    fn kind_parsing_round_trips() {
        for kind in ROSTER {
            assert_eq!(BaseLearnerKind::parse(kind.name()).unwrap(), kind);
            assert_eq!(BaseLearnerKind::parse(&kind.name().to_lowercase()).unwrap(), kind);
        }
        assert!(BaseLearnerKind::parse("LDA").is_err());
    }

    #[test]
    fn reseeding_changes_only_the_seed() {
        let spec = BaseLearnerSpec::<f64>::with_defaults(BaseLearnerKind::Rf, 1);
        let re = spec.reseeded(99);
        assert_eq!(re.seed(), 99);
        match (&spec.params, &re.params) {
            (LearnerParams::RandomForest(a), LearnerParams::RandomForest(b)) => {
                assert_eq!(a.n_trees, b.n_trees);
                assert_ne!(a.seed, b.seed);
            }
            _ => panic!("kind changed"),
        }
    }

    fn fixture() -> (Matrix<f64>, Vec<u8>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..12 {
            let j = (i as f64 * 0.21) % 1.0;
            rows.push(vec![j, 1.0 - j]);
            labels.push(0);
            rows.push(vec![3.0 + j, 4.0 - j]);
            labels.push(1);
        }
        (Matrix::from_rows(rows).unwrap(), labels)
    }

    #[test]
    fn every_learner_in_the_registry_normalizes_probabilities() {
        let (x, y) = fixture();
        for (i, spec) in default_roster::<f64>(7).iter().enumerate() {
            let model = fit_base_learner(spec, &x, &y).unwrap();
            let p = model.predict_proba(&x).unwrap();
            assert_eq!(p.len(), x.n_rows());
            for p in p {
                assert!(p[0] >= 0.0 && p[0] <= 1.0, "learner {i}");
                assert!((p[0] + p[1] - 1.0).abs() < 1e-12, "learner {i}");
            }
        }
    }

    #[test]
    fn every_learner_is_deterministic_given_its_seed() {
        let (x, y) = fixture();
        for spec in default_roster::<f64>(3) {
            let a = fit_base_learner(&spec, &x, &y).unwrap();
            let b = fit_base_learner(&spec, &x, &y).unwrap();
            assert_eq!(a, b, "{} refits differ", spec.kind);
        }
    }

    #[test]
    fn zero_weight_logistic_is_uninformative() {
        let model = TrainedModel::Logistic(LinearModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            kind: crate::baselines::LinearKind::Logistic,
            config: LinearConfig::default(),
        });
        let rows = Matrix::from_rows(vec![vec![3.0, -2.0]]).unwrap();
        assert_eq!(model.predict_proba(&rows).unwrap()[0], [0.5, 0.5]);
    }
}
