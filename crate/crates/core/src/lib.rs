//! tabstack: a from-scratch stacked-ensemble toolkit for tabular binary
//! classification.
//!
//! Nine base learners (CART, random forest, extra trees, AdaBoost, gradient
//! boosting, a second-order regularized booster, k-nearest neighbors, a
//! linear SVC, and a one-hidden-layer MLP) share a uniform
//! predict-probability contract and feed a two-level stacked ensemble whose
//! logistic meta-learner trains on out-of-fold predictions. The crate also
//! carries the preprocessing pipeline (CSV ingestion, z-score outlier
//! removal, standardization, stratified splits and folds) and the
//! eight-metric evaluation suite the reports are built from.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (f32 or f64);
//! the aliases at the crate root fix f64 for ordinary use.

pub mod baselines;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod persist;
pub mod rng;
pub mod scalar;
pub mod stacking;
pub mod tree;

pub use error::{Error, Result};

/// Default-precision aliases.
pub type Dataset = dataset::LabeledDataset<f64>;
pub type Standardizer = dataset::Standardizer<f64>;
pub type Tree = tree::DecisionTree<f64>;
pub type EvaluationRow = metrics::EvaluationRow<f64>;
pub type RocCurve = metrics::RocCurve<f64>;
pub type Model = model::TrainedModel<f64>;
pub type LearnerSpec = model::BaseLearnerSpec<f64>;
pub type Stack = stacking::StackedModel<f64>;
