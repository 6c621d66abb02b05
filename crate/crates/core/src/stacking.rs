//! Two-level stacked ensemble. Level 0 is an ordered roster of base
//! learners; level 1 is a logistic meta-learner trained on out-of-fold
//! predictions, so no meta-feature for a row ever comes from a model that
//! saw that row. After the meta-learner is fit, every base learner is refit
//! on the full training set for deployment-time prediction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_logistic_regression, LinearConfig, LinearModel};
use crate::dataset::{stratified_kfold, FoldPlan, LabeledDataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{fit_base_learner, BaseLearnerSpec, TrainedModel};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// N x B matrix of out-of-fold P(1) values; column j belongs to roster
/// member j.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaFeatures<S> {
    pub matrix: Matrix<S>,
    pub layout: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct StackedModel<S: Scalar> {
    pub base_specs: Vec<BaseLearnerSpec<S>>,
    /// Level-0 learners refit on the full training set.
    pub base_models: Vec<TrainedModel<S>>,
    /// Level-1 logistic combiner over the meta-feature columns.
    pub meta: LinearModel<S>,
    pub fold_plan_used: FoldPlan,
    pub meta_feature_layout: Vec<String>,
}

fn validate_specs<S: Scalar>(specs: &[BaseLearnerSpec<S>]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Parameter("a stacked ensemble needs at least one base learner".into()));
    }
    for (i, a) in specs.iter().enumerate() {
        if specs[i + 1..].iter().any(|b| b.kind == a.kind) {
            return Err(Error::Parameter(format!(
                "duplicate learner \"{}\" in the roster",
                a.kind
            )));
        }
    }
    Ok(())
}

fn validate_fold_plan<S: Scalar>(train: &LabeledDataset<S>, plan: &FoldPlan) -> Result<()> {
    let mut seen = vec![false; train.n_rows()];
    for fold in &plan.folds {
        for &i in fold {
            if i >= train.n_rows() || seen[i] {
                return Err(Error::Shape(
                    "fold plan must partition the training rows exactly once".into(),
                ));
            }
            seen[i] = true;
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::Shape("fold plan does not cover every training row".into()));
    }
    Ok(())
}

/// Out-of-fold meta-features: entry (i, j) is P(1) for row i from learner j
/// fitted on every fold except row i's. Fold-fits run independently and are
/// assembled positionally, so thread schedule cannot change the result.
pub fn generate_oof_meta_features<S: Scalar>(
    train: &LabeledDataset<S>,
    specs: &[BaseLearnerSpec<S>],
    fold_plan: &FoldPlan,
) -> Result<MetaFeatures<S>> {
    validate_specs(specs)?;
    validate_fold_plan(train, fold_plan)?;
    for (f, _) in fold_plan.folds.iter().enumerate() {
        let complement = fold_plan.complement(f);
        let labels: Vec<u8> = complement.iter().map(|&i| train.labels[i]).collect();
        if !(labels.contains(&0) && labels.contains(&1)) {
            return Err(Error::SingleClass(format!(
                "training complement of fold {f} contains a single class"
            )));
        }
    }

    let tasks: Vec<(usize, usize)> = (0..fold_plan.folds.len())
        .flat_map(|f| (0..specs.len()).map(move |j| (f, j)))
        .collect();
    let results: Result<Vec<(usize, usize, Vec<S>)>> = tasks
        .into_par_iter()
        .map(|(f, j)| {
            let complement = fold_plan.complement(f);
            let fit_features = train.features.select_rows(&complement);
            let fit_labels: Vec<u8> = complement.iter().map(|&i| train.labels[i]).collect();
            let spec = specs[j].reseeded(derive_seed(specs[j].seed(), f as u64));
            let model = fit_base_learner(&spec, &fit_features, &fit_labels)?;
            let fold_features = train.features.select_rows(&fold_plan.folds[f]);
            let p1 = model.predict_p1(&fold_features)?;
            Ok((f, j, p1))
        })
        .collect();

    let mut matrix = Matrix::zeros(train.n_rows(), specs.len());
    for (f, j, p1) in results? {
        for (&row, &p) in fold_plan.folds[f].iter().zip(&p1) {
            matrix.set(row, j, p);
        }
    }
    Ok(MetaFeatures {
        matrix,
        layout: specs.iter().map(|s| s.kind.name().to_string()).collect(),
    })
}

/// Meta-learner defaults: same logistic trainer as the baselines.
fn meta_config<S: Scalar>(seed: u64) -> LinearConfig<S> {
    LinearConfig { epochs: 500, learning_rate: S::cast(0.1), l2: S::cast(1e-4), seed }
}

/// Fit the full two-level ensemble: build a stratified fold plan, generate
/// out-of-fold meta-features, train the logistic meta-learner on them, then
/// refit every base learner on the complete training set.
pub fn fit_stacked_ensemble<S: Scalar>(
    train: &LabeledDataset<S>,
    specs: &[BaseLearnerSpec<S>],
    k: usize,
    seed: u64,
) -> Result<StackedModel<S>> {
    validate_specs(specs)?;
    let fold_plan = stratified_kfold(train, k, seed)?;
    fit_stacked_with_plan(train, specs, fold_plan, seed)
}

/// Same as [`fit_stacked_ensemble`] but with a caller-provided fold plan.
pub fn fit_stacked_with_plan<S: Scalar>(
    train: &LabeledDataset<S>,
    specs: &[BaseLearnerSpec<S>],
    fold_plan: FoldPlan,
    seed: u64,
) -> Result<StackedModel<S>> {
    let meta_features = generate_oof_meta_features(train, specs, &fold_plan)?;
    let meta = fit_logistic_regression(&meta_features.matrix, &train.labels, meta_config(seed))?;

    let base_models: Result<Vec<TrainedModel<S>>> = specs
        .par_iter()
        .map(|spec| fit_base_learner(spec, &train.features, &train.labels))
        .collect();

    Ok(StackedModel {
        base_specs: specs.to_vec(),
        base_models: base_models?,
        meta,
        fold_plan_used: fold_plan,
        meta_feature_layout: meta_features.layout,
    })
}

impl<S: Scalar> StackedModel<S> {
    /// Meta-feature rows for new data: each refit base predicts P(1), in
    /// roster order.
    pub fn meta_features_for(&self, rows: &Matrix<S>) -> Result<Matrix<S>> {
        let mut matrix = Matrix::zeros(rows.n_rows(), self.base_models.len());
        for (j, model) in self.base_models.iter().enumerate() {
            for (i, p) in model.predict_p1(rows)?.into_iter().enumerate() {
                matrix.set(i, j, p);
            }
        }
        Ok(matrix)
    }

    pub fn predict_proba(&self, rows: &Matrix<S>) -> Result<Vec<[S; 2]>> {
        let meta_rows = self.meta_features_for(rows)?;
        self.meta.predict_proba(&meta_rows)
    }
}

/// Free-function form of [`StackedModel::predict_proba`].
pub fn stacked_predict_proba<S: Scalar>(
    model: &StackedModel<S>,
    rows: &Matrix<S>,
) -> Result<Vec<[S; 2]>> {
    model.predict_proba(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BaseLearnerKind, LearnerParams};

    fn knn1_spec() -> BaseLearnerSpec<f64> {
        BaseLearnerSpec { kind: BaseLearnerKind::Knn, params: LearnerParams::Knn { k: 1 } }
    }

    fn loo_plan(n: usize) -> FoldPlan {
        FoldPlan { k: n, folds: (0..n).map(|i| vec![i]).collect(), seed: 0 }
    }

    #[test]
    fn leave_one_out_knn_reads_the_nearest_other_point() {
        let train = LabeledDataset::from_rows(
            vec![vec![0.0], vec![1.0], vec![2.1], vec![3.3]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let meta =
            generate_oof_meta_features(&train, &[knn1_spec()], &loo_plan(4)).unwrap();
        // nearest other point of each row: 1, 0, 1, 2 -> labels 0, 0, 0, 1
        let col: Vec<f64> = meta.matrix.column(0).collect();
        assert_eq!(col, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn oof_matrix_shape_and_range() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            rows.push(vec![i as f64 * 0.1, 1.0 - i as f64 * 0.1]);
            labels.push(0);
            rows.push(vec![3.0 + i as f64 * 0.1, 2.0 + i as f64 * 0.1]);
            labels.push(1);
        }
        let train = LabeledDataset::from_rows(rows, labels).unwrap();
        let specs = crate::model::default_roster::<f64>(5);
        let plan = stratified_kfold(&train, 2, 5).unwrap();
        let meta = generate_oof_meta_features(&train, &specs, &plan).unwrap();
        assert_eq!(meta.matrix.n_rows(), 20);
        assert_eq!(meta.matrix.n_cols(), 9);
        for i in 0..20 {
            for v in meta.matrix.row(i) {
                assert!((0.0..=1.0).contains(v));
            }
        }
        assert_eq!(meta.layout, ["RF", "MLP", "KNN", "ETC", "XGB", "SVC", "ADB", "CART", "GBM"]);
    }

    #[test]
    fn single_class_complement_names_the_fold() {
        let train = LabeledDataset::from_rows(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 1, 1, 1],
        )
        .unwrap();
        // fold 0 carries the only negative row, so its complement {2,3} is
        // single-class while fold 1's complement {0,1} is fine
        let plan = FoldPlan { k: 2, folds: vec![vec![0, 1], vec![2, 3]], seed: 0 };
        let err = generate_oof_meta_features(&train, &[knn1_spec()], &plan).unwrap_err();
        assert!(err.to_string().contains("fold 0"), "got: {err}");
    }

    #[test]
    fn broken_fold_plans_are_rejected() {
        let train =
            LabeledDataset::from_rows(vec![vec![0.0], vec![1.0]], vec![0, 1]).unwrap();
        let overlapping = FoldPlan { k: 2, folds: vec![vec![0, 1], vec![1]], seed: 0 };
        assert!(generate_oof_meta_features(&train, &[knn1_spec()], &overlapping).is_err());
        let incomplete = FoldPlan { k: 2, folds: vec![vec![0]], seed: 0 };
        assert!(generate_oof_meta_features(&train, &[knn1_spec()], &incomplete).is_err());
    }

    /// Paired points with identical labels make the leave-one-out KNN column
    /// equal the label exactly, so the meta-learner sees a perfect feature.
    #[test]
    fn perfectly_informative_meta_feature_reaches_full_training_accuracy() {
        let train = LabeledDataset::from_rows(
            vec![
                vec![0.0],
                vec![0.1],
                vec![5.0],
                vec![5.1],
                vec![10.0],
                vec![10.1],
                vec![15.0],
                vec![15.1],
            ],
            vec![0, 0, 1, 1, 0, 0, 1, 1],
        )
        .unwrap();
        let model =
            fit_stacked_with_plan(&train, &[knn1_spec()], loo_plan(8), 0).unwrap();
        let p = model.predict_proba(&train.features).unwrap();
        for (p, &y) in p.iter().zip(&train.labels) {
            assert_eq!(u8::from(p[1] >= 0.5), y);
        }
    }

    #[test]
    fn fitting_twice_is_bit_identical() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..8 {
            rows.push(vec![i as f64, (i * i % 5) as f64]);
            labels.push(u8::from(i >= 4));
        }
        let train = LabeledDataset::from_rows(rows, labels).unwrap();
        let specs = vec![
            BaseLearnerSpec::with_defaults(BaseLearnerKind::Cart, 3),
            knn1_spec(),
        ];
        let a = fit_stacked_ensemble(&train, &specs, 2, 11).unwrap();
        let b = fit_stacked_ensemble(&train, &specs, 2, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn duplicate_roster_entries_rejected() {
        let train =
            LabeledDataset::from_rows(vec![vec![0.0], vec![1.0]], vec![0, 1]).unwrap();
        let err = fit_stacked_ensemble(&train, &[knn1_spec(), knn1_spec()], 2, 0).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn zero_meta_weights_predict_half() {
        let train = LabeledDataset::from_rows(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let mut model = fit_stacked_with_plan(&train, &[knn1_spec()], loo_plan(4), 0).unwrap();
        model.meta.weights.iter_mut().for_each(|w| *w = 0.0);
        model.meta.bias = 0.0;
        for p in model.predict_proba(&train.features).unwrap() {
            assert_eq!(p, [0.5, 0.5]);
        }
    }

    #[test]
    fn dominant_meta_weight_tracks_that_base() {
        let train = LabeledDataset::from_rows(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0], vec![5.0]],
            vec![0, 0, 0, 1, 1, 1],
        )
        .unwrap();
        let specs = vec![
            knn1_spec(),
            BaseLearnerSpec::with_defaults(BaseLearnerKind::Cart, 1),
        ];
        let mut model = fit_stacked_ensemble(&train, &specs, 3, 2).unwrap();
        model.meta.weights = vec![10.0, 1e-9];
        model.meta.bias = -5.0;
        let stacked = model.predict_proba(&train.features).unwrap();
        let base = model.base_models[0].predict_p1(&train.features).unwrap();
        for (s, b) in stacked.iter().zip(base) {
            assert_eq!(s[1] >= 0.5, b > 0.5, "stack must follow the dominant base");
        }
    }

    #[test]
    fn permuting_specs_and_weights_together_changes_nothing() {
        let train = LabeledDataset::from_rows(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0], vec![5.0]],
            vec![0, 0, 0, 1, 1, 1],
        )
        .unwrap();
        let specs = vec![
            knn1_spec(),
            BaseLearnerSpec::with_defaults(BaseLearnerKind::Cart, 1),
        ];
        let model = fit_stacked_ensemble(&train, &specs, 3, 2).unwrap();
        let mut permuted = model.clone();
        permuted.base_models.swap(0, 1);
        permuted.base_specs.swap(0, 1);
        permuted.meta_feature_layout.swap(0, 1);
        permuted.meta.weights.swap(0, 1);
        let a = model.predict_proba(&train.features).unwrap();
        let b = permuted.predict_proba(&train.features).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn layout_is_stable_between_fit_and_predict() {
        let train = LabeledDataset::from_rows(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let specs = vec![
            BaseLearnerSpec::with_defaults(BaseLearnerKind::Cart, 1),
            knn1_spec(),
        ];
        let model = fit_stacked_ensemble(&train, &specs, 2, 0).unwrap();
        assert_eq!(model.meta_feature_layout, vec!["CART", "KNN"]);
        assert_eq!(model.meta.weights.len(), 2);
        let meta_rows = model.meta_features_for(&train.features).unwrap();
        assert_eq!(meta_rows.n_cols(), 2);
    }
}
