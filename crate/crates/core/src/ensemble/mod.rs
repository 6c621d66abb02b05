//! Tree ensembles: random forest, extra trees, AdaBoost over stumps,
//! gradient boosting on log-loss with Newton leaf steps, and a second-order
//! regularized booster.
//!
//! Every fit derives one generator stream per tree (or stage) from
//! (seed, index), so a forest fitted across worker threads is bit-identical
//! to one fitted sequentially.

mod adaboost;
mod forest;
mod gbm;
mod xgb;

pub use adaboost::{fit_adaboost, AdaBoostConfig, AdaBoostModel};
pub use forest::{fit_extra_trees, fit_random_forest, ForestConfig, ForestKind, ForestModel};
pub use gbm::{fit_gbm, GbmConfig, GbmModel};
pub use xgb::{fit_xgb, XgbConfig, XgbModel};

use crate::error::{Error, Result};

pub(crate) fn check_binary_training_set(labels: &[u8]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Shape("cannot fit on zero rows".into()));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::Shape("labels must contain only 0 and 1".into()));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::SingleClass("ensemble fits need both classes present".into()));
    }
    Ok(())
}

/// Prior log-odds ln(pos/neg) used as the boosting starting score.
pub(crate) fn prior_log_odds<S: crate::scalar::Scalar>(labels: &[u8]) -> S {
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    (S::from_count(pos) / S::from_count(neg)).ln()
}
