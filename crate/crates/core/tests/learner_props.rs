//! Learner-level oracles and laws: KNN against a full-sort scan, MLP
//! gradients against central finite differences, the AdaBoost reweighting
//! law, the Newton leaf-weight law, the single-tree forest equivalence, and
//! bit-identical fits across thread counts.

use rand::Rng;
use rayon::ThreadPoolBuilder;
use tabstack::baselines::{fit_knn, fit_mlp, mlp_gradients, mlp_loss, MlpConfig, MlpModel};
use tabstack::dataset::LabeledDataset;
use tabstack::ensemble::{
    fit_adaboost, fit_random_forest, fit_xgb, AdaBoostConfig, ForestConfig, XgbConfig,
};
use tabstack::matrix::Matrix;
use tabstack::model::{fit_base_learner, default_roster};
use tabstack::rng::{derive_seed, rng_from};
use tabstack::stacking::fit_stacked_ensemble;
use tabstack::tree::{fit_tree, LeafValue, MaxFeatures, Node, TreeConfig, TreeTargets};

fn random_matrix(rng: &mut rand_chacha::ChaCha8Rng, n: usize, d: usize) -> Matrix<f64> {
    Matrix::from_rows(
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()).collect(),
    )
    .unwrap()
}

fn random_labels(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<u8> {
    loop {
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
        if labels.contains(&0) && labels.contains(&1) {
            return labels;
        }
    }
}

/// Full stable sort on (distance, index): the independent neighbor oracle.
fn knn_oracle(train: &Matrix<f64>, labels: &[u8], query: &[f64], k: usize) -> f64 {
    let mut scored: Vec<(f64, usize)> = (0..train.n_rows())
        .map(|i| {
            let d: f64 =
                train.row(i).iter().zip(query).map(|(&a, &b)| (a - b) * (a - b)).sum();
            (d, i)
        })
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    scored[..k].iter().filter(|&&(_, i)| labels[i] == 1).count() as f64 / k as f64
}

#[test]
fn knn_matches_the_full_sort_oracle_on_100_fixtures() {
    let mut rng = rng_from(404);
    for _ in 0..100 {
        let n = rng.random_range(1..=100);
        let d = rng.random_range(1..=3);
        let train = random_matrix(&mut rng, n, d);
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
        let k = rng.random_range(1..=n);
        let model = fit_knn(&train, &labels, k).unwrap();
        let queries = random_matrix(&mut rng, 10, d);
        let p = model.predict_proba(&queries).unwrap();
        for (qi, p) in p.iter().enumerate() {
            let expected = knn_oracle(&train, &labels, queries.row(qi), k);
            assert_eq!(p[1], expected, "n={n} k={k} query {qi}");
        }
        // training points themselves are the tie-heavy cases
        let self_p = model.predict_proba(&train).unwrap();
        for (i, p) in self_p.iter().enumerate() {
            assert_eq!(p[1], knn_oracle(&train, &labels, train.row(i), k));
        }
    }
}

/// Flattened mutable views over every MLP parameter, for the
/// finite-difference sweep.
fn for_each_parameter(model: &mut MlpModel<f64>, mut f: impl FnMut(&mut f64)) {
    let h = model.config.hidden_size;
    let d = model.hidden_weights.n_cols();
    for i in 0..h {
        for j in 0..d {
            let mut v = model.hidden_weights.get(i, j);
            f(&mut v);
            model.hidden_weights.set(i, j, v);
        }
    }
    for b in &mut model.hidden_bias {
        f(b);
    }
    for w in &mut model.output_weights {
        f(w);
    }
    f(&mut model.output_bias);
}

#[test]
fn mlp_gradients_match_central_finite_differences() {
    let x = Matrix::from_rows(vec![
        vec![0.2, 0.9],
        vec![0.8, 0.1],
        vec![0.4, 0.5],
        vec![0.9, 0.8],
    ])
    .unwrap();
    let y = vec![0u8, 1, 1, 0];
    let eps = 1e-5;
    for seed in [1u64, 2, 3] {
        // a few training steps move the check away from the init point
        let config = MlpConfig { hidden_size: 3, epochs: 40, learning_rate: 0.3, seed };
        let model = fit_mlp(&x, &y, config).unwrap();
        let analytic = mlp_gradients(&model, &x, &y);

        // flatten in the same order as for_each_parameter
        let mut flat_analytic = Vec::new();
        for i in 0..3 {
            for j in 0..2 {
                flat_analytic.push(analytic.hidden_weights.get(i, j));
            }
        }
        flat_analytic.extend(&analytic.hidden_bias);
        flat_analytic.extend(&analytic.output_weights);
        flat_analytic.push(analytic.output_bias);

        let mut numeric = Vec::new();
        let mut param_index = 0;
        loop {
            let mut plus = model.clone();
            let mut minus = model.clone();
            let mut i = 0;
            let mut touched = false;
            for_each_parameter(&mut plus, |v| {
                if i == param_index {
                    *v += eps;
                    touched = true;
                }
                i += 1;
            });
            if !touched {
                break;
            }
            let mut i = 0;
            for_each_parameter(&mut minus, |v| {
                if i == param_index {
                    *v -= eps;
                }
                i += 1;
            });
            numeric.push((mlp_loss(&plus, &x, &y) - mlp_loss(&minus, &x, &y)) / (2.0 * eps));
            param_index += 1;
        }

        assert_eq!(numeric.len(), flat_analytic.len());
        for (i, (&a, &f)) in flat_analytic.iter().zip(&numeric).enumerate() {
            let rel = (a - f).abs() / a.abs().max(f.abs()).max(1e-12);
            assert!(rel < 1e-6, "seed {seed} parameter {i}: analytic {a} vs numeric {f} (rel {rel})");
        }
    }
}

/// Reconstruct the boosting weight trajectory from the fitted stages and
/// check the reweighting law stage by stage.
#[test]
fn adaboost_weight_trajectory_obeys_the_law() {
    let mut rng = rng_from(55);
    for _ in 0..10 {
        let n = rng.random_range(8..=30);
        let x = random_matrix(&mut rng, n, 2);
        let labels = random_labels(&mut rng, n);
        let config = AdaBoostConfig { n_stages: 10, max_depth: 1, seed: 3 };
        let model = fit_adaboost(&x, &labels, config).unwrap();

        let mut weights = vec![1.0 / n as f64; n];
        for (stump, &alpha) in model.stumps.iter().zip(&model.alphas) {
            let preds: Vec<u8> = (0..n)
                .map(|i| {
                    let p = stump.predict_distribution(x.row(i)).unwrap();
                    u8::from(p[1] > p[0])
                })
                .collect();
            let error: f64 = weights
                .iter()
                .zip(preds.iter().zip(&labels))
                .filter(|(_, (p, y))| p != y)
                .map(|(w, _)| w)
                .sum();
            if error > 0.0 && error < 0.5 {
                // alpha must encode exactly this weighted error
                let implied = 0.5 * ((1.0 - error) / error).ln();
                assert!((alpha - implied).abs() < 1e-9, "alpha {alpha} vs {implied}");
                let before = weights.clone();
                for i in 0..n {
                    let sign = if preds[i] == labels[i] { -alpha } else { alpha };
                    weights[i] *= sign.exp();
                }
                // misclassified rows gained weight before normalization
                for i in 0..n {
                    if preds[i] != labels[i] {
                        assert!(weights[i] > before[i]);
                    }
                }
                let total: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= total);
                let sum: f64 = weights.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn xgb_every_leaf_satisfies_the_newton_law() {
    let mut rng = rng_from(66);
    for seed in 0..5u64 {
        let n = rng.random_range(10..=40);
        let x = random_matrix(&mut rng, n, 3);
        let labels = random_labels(&mut rng, n);
        let config = XgbConfig { n_stages: 12, ..XgbConfig::default_with_seed(seed) };
        let model = fit_xgb(&x, &labels, config).unwrap();
        for stage in &model.stages {
            for node in &stage.nodes {
                if let Node::Leaf(LeafValue::Newton { value, grad_sum, hess_sum }) = node {
                    assert_eq!(*value, -grad_sum / (hess_sum + model.config.lambda));
                }
            }
        }
    }
}

#[test]
fn single_tree_forest_equals_cart_on_50_random_fixtures() {
    let mut rng = rng_from(88);
    for trial in 0..50 {
        let n = rng.random_range(4..=50);
        let d = rng.random_range(1..=4);
        let x = random_matrix(&mut rng, n, d);
        let labels = random_labels(&mut rng, n);
        let config = ForestConfig {
            n_trees: 1,
            max_features: MaxFeatures::All,
            bootstrap: false,
            ..ForestConfig::random_forest_default(trial)
        };
        let forest = fit_random_forest(&x, &labels, config).unwrap();
        let classes: Vec<usize> = labels.iter().map(|&y| y as usize).collect();
        let tree_config = TreeConfig { seed: derive_seed(trial, 0), ..TreeConfig::default() };
        let cart = fit_tree(
            &x,
            &TreeTargets::Classes(&classes),
            &vec![1.0; n],
            &tree_config,
        )
        .unwrap();
        let from_forest = forest.predict_proba(&x).unwrap();
        for (i, p) in from_forest.iter().enumerate() {
            let direct = cart.predict_distribution(x.row(i)).unwrap();
            assert_eq!(p[0], direct[0], "trial {trial} row {i}");
            assert_eq!(p[1], direct[1], "trial {trial} row {i}");
        }
    }
}

#[test]
fn forest_capacity_does_not_hurt_on_the_separable_fixture() {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..10 {
        let j = i as f64 * 0.13 % 1.0;
        rows.push(vec![j, j * 0.7]);
        labels.push(0u8);
        rows.push(vec![5.0 + j, 4.0 + j * 0.7]);
        labels.push(1u8);
    }
    let x = Matrix::from_rows(rows).unwrap();
    let accuracy = |p: &[[f64; 2]]| {
        p.iter().zip(&labels).filter(|&(p, &y)| u8::from(p[1] >= 0.5) == y).count() as f64
            / labels.len() as f64
    };
    for seed in 0..5u64 {
        let one = fit_random_forest(
            &x,
            &labels,
            ForestConfig { n_trees: 1, ..ForestConfig::random_forest_default(seed) },
        )
        .unwrap();
        let many = fit_random_forest(
            &x,
            &labels,
            ForestConfig { n_trees: 25, ..ForestConfig::random_forest_default(seed) },
        )
        .unwrap();
        let acc_one = accuracy(&one.predict_proba(&x).unwrap());
        let acc_many = accuracy(&many.predict_proba(&x).unwrap());
        assert!(acc_many >= acc_one, "seed {seed}: {acc_many} < {acc_one}");
    }
}

/// Fitting inside 1-thread and 4-thread pools must produce bit-identical
/// models: all per-tree and per-fold streams derive from (seed, index).
#[test]
fn fits_are_bit_identical_across_thread_counts() {
    let mut rng = rng_from(99);
    let n = 40;
    let x = random_matrix(&mut rng, n, 3);
    let labels = random_labels(&mut rng, n);
    let data = LabeledDataset::from_rows(
        (0..n).map(|i| x.row(i).to_vec()).collect(),
        labels.clone(),
    )
    .unwrap();

    let run = |threads: usize| {
        let pool = ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let forest = fit_random_forest(
                &x,
                &labels,
                ForestConfig { n_trees: 16, ..ForestConfig::random_forest_default(7) },
            )
            .unwrap();
            let specs = vec![
                default_roster::<f64>(7)[0].clone(), // RF
                default_roster::<f64>(7)[2].clone(), // KNN
                default_roster::<f64>(7)[7].clone(), // CART
            ];
            let stack = fit_stacked_ensemble(&data, &specs, 2, 7).unwrap();
            (forest, stack)
        })
    };
    let (forest_1, stack_1) = run(1);
    let (forest_4, stack_4) = run(4);
    assert_eq!(forest_1, forest_4);
    assert_eq!(stack_1, stack_4);
    assert_eq!(
        serde_json::to_vec(&stack_1).unwrap(),
        serde_json::to_vec(&stack_4).unwrap()
    );
}

#[test]
fn all_nine_learners_fit_and_normalize_on_a_random_fixture() {
    let mut rng = rng_from(123);
    let x = random_matrix(&mut rng, 30, 4);
    let labels = random_labels(&mut rng, 30);
    for spec in default_roster::<f64>(11) {
        let model = fit_base_learner(&spec, &x, &labels).unwrap();
        for p in model.predict_proba(&x).unwrap() {
            assert!(p[0] >= 0.0 && p[0] <= 1.0);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12, "{}", spec.kind);
        }
    }
}
