//! CART decision trees: the shared kernel behind the standalone tree model,
//! both forests, AdaBoost stumps, and both boosters.
//!
//! Classification trees split on weighted Gini or entropy; regression trees
//! on weighted variance; boosted trees on the second-order gain computed from
//! per-row gradient/hessian sums. Splits always send `value <= threshold`
//! left, thresholds are midpoints between consecutive distinct sorted values
//! (or one uniform draw per feature in random-threshold mode), and ties are
//! broken toward the lowest feature index, then the smallest threshold, so a
//! fitted tree is a pure function of (data, config).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_from, sample_indices};
use crate::scalar::Scalar;

/// Nonnegative per-class weights; probabilities are weights / total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution<S> {
    pub weights: Vec<S>,
}

impl<S: Scalar> ClassDistribution<S> {
    pub fn new(weights: Vec<S>) -> Self {
        Self { weights }
    }

    pub fn zeros(n_classes: usize) -> Self {
        Self { weights: vec![S::zero(); n_classes] }
    }

    pub fn total(&self) -> S {
        self.weights.iter().copied().sum()
    }

    pub fn probabilities(&self) -> Result<Vec<S>> {
        let total = self.total();
        if !(total > S::zero()) {
            return Err(Error::Shape("class distribution has zero total weight".into()));
        }
        Ok(self.weights.iter().map(|&w| w / total).collect())
    }

    /// Class index with the largest weight (lowest index wins ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

/// Gini impurity 1 - sum(p_i^2); 0 at pure nodes, 1 - 1/G at uniform ones.
pub fn gini_impurity<S: Scalar>(dist: &ClassDistribution<S>) -> Result<S> {
    let p = dist.probabilities()?;
    Ok(S::one() - p.into_iter().map(|p| p * p).sum())
}

/// Shannon entropy sum(-p_i log2 p_i) in bits, with 0 log 0 = 0.
pub fn entropy<S: Scalar>(dist: &ClassDistribution<S>) -> Result<S> {
    let p = dist.probabilities()?;
    Ok(p.into_iter()
        .map(|p| if p > S::zero() { -p * p.log2() } else { S::zero() })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion<S> {
    Gini,
    Entropy,
    Variance,
    /// Second-order boosting gain with ridge term `lambda` and per-split
    /// penalty `gamma`.
    SecondOrder { lambda: S, gamma: S },
}

impl<S: Scalar> Criterion<S> {
    pub fn is_classification(&self) -> bool {
        matches!(self, Criterion::Gini | Criterion::Entropy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeMode {
    Classification,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(&self, n_features: usize) -> Result<usize> {
        let m = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Count(m) => {
                if *m == 0 {
                    return Err(Error::Parameter("max_features count must be at least 1".into()));
                }
                (*m).min(n_features)
            }
        };
        Ok(m.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Exhaustive midpoints between consecutive distinct values.
    Best,
    /// One uniform threshold in (min, max) per candidate feature.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig<S> {
    pub criterion: Criterion<S>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub threshold_mode: ThresholdMode,
    pub seed: u64,
}

impl<S: Scalar> Default for TreeConfig<S> {
    fn default() -> Self {
        Self {
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            threshold_mode: ThresholdMode::Best,
            seed: 0,
        }
    }
}

impl<S: Scalar> TreeConfig<S> {
    fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::Parameter("min_samples_split must be at least 2".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::Parameter("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

/// Fit targets: class indices, regression values, or per-row gradient pairs.
#[derive(Debug, Clone, Copy)]
pub enum TreeTargets<'a, S> {
    Classes(&'a [usize]),
    Values(&'a [S]),
    GradHess { grad: &'a [S], hess: &'a [S] },
}

impl<S: Scalar> TreeTargets<'_, S> {
    fn len(&self) -> usize {
        match self {
            TreeTargets::Classes(t) => t.len(),
            TreeTargets::Values(t) => t.len(),
            TreeTargets::GradHess { grad, .. } => grad.len(),
        }
    }
}

/// Leaf payload, depending on how the tree was fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafValue<S> {
    Distribution(ClassDistribution<S>),
    Value(S),
    /// Newton leaf: value = -grad_sum / (hess_sum + lambda). The sums stay
    /// around so the stored weight can be re-derived and audited.
    Newton { value: S, grad_sum: S, hess_sum: S },
}

impl<S: Scalar> LeafValue<S> {
    pub fn value(&self) -> Result<S> {
        match self {
            LeafValue::Value(v) => Ok(*v),
            LeafValue::Newton { value, .. } => Ok(*value),
            LeafValue::Distribution(_) => {
                Err(Error::Model("classification leaf queried for a scalar value".into()))
            }
        }
    }
}

/// Pre-order node list with explicit child indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node<S> {
    Internal { feature: usize, threshold: S, left: usize, right: usize },
    Leaf(LeafValue<S>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree<S> {
    pub nodes: Vec<Node<S>>,
    pub mode: TreeMode,
    pub criterion: Criterion<S>,
    pub n_features: usize,
    pub n_classes: usize,
}

impl<S: Scalar> DecisionTree<S> {
    /// Single-leaf classification tree; handy for composing fixtures.
    pub fn leaf_classification(weights: Vec<S>, n_features: usize) -> Self {
        let n_classes = weights.len();
        Self {
            nodes: vec![Node::Leaf(LeafValue::Distribution(ClassDistribution::new(weights)))],
            mode: TreeMode::Classification,
            criterion: Criterion::Gini,
            n_features,
            n_classes,
        }
    }

    pub fn leaf_regression(value: S, n_features: usize) -> Self {
        Self {
            nodes: vec![Node::Leaf(LeafValue::Value(value))],
            mode: TreeMode::Regression,
            criterion: Criterion::Variance,
            n_features,
            n_classes: 0,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<S>(nodes: &[Node<S>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Internal { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    /// Index of the leaf a row routes to.
    pub fn leaf_index_for(&self, row: &[S]) -> Result<usize> {
        if row.len() != self.n_features {
            return Err(Error::Model(format!(
                "row has {} features, tree was fit on {}",
                row.len(),
                self.n_features
            )));
        }
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(_) => return Ok(i),
                Node::Internal { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn leaf_value_at(&self, index: usize) -> &LeafValue<S> {
        match &self.nodes[index] {
            Node::Leaf(v) => v,
            Node::Internal { .. } => panic!("node {index} is not a leaf"),
        }
    }

    pub fn set_leaf_value(&mut self, index: usize, value: LeafValue<S>) {
        match &mut self.nodes[index] {
            Node::Leaf(v) => *v = value,
            Node::Internal { .. } => panic!("node {index} is not a leaf"),
        }
    }

    /// Class probabilities for a row (classification trees only).
    pub fn predict_distribution(&self, row: &[S]) -> Result<Vec<S>> {
        match self.leaf_value_at(self.leaf_index_for(row)?) {
            LeafValue::Distribution(d) => d.probabilities(),
            _ => Err(Error::Model("regression tree queried for class probabilities".into())),
        }
    }

    /// Leaf value for a row (regression trees only).
    pub fn predict_value(&self, row: &[S]) -> Result<S> {
        self.leaf_value_at(self.leaf_index_for(row)?).value()
    }
}

/// Either outcome of `tree_predict`, depending on the tree mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction<S> {
    Probabilities(Vec<S>),
    Value(S),
}

pub fn tree_predict<S: Scalar>(tree: &DecisionTree<S>, row: &[S]) -> Result<Prediction<S>> {
    match tree.mode {
        TreeMode::Classification => Ok(Prediction::Probabilities(tree.predict_distribution(row)?)),
        TreeMode::Regression => Ok(Prediction::Value(tree.predict_value(row)?)),
    }
}

/// Node statistics on one side of a candidate split.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeStats<S> {
    Distribution(ClassDistribution<S>),
    Moments { weight: S, mean: S },
    Gradient { grad_sum: S, hess_sum: S },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate<S> {
    pub feature_index: usize,
    pub threshold: S,
    pub gain: S,
    pub left: NodeStats<S>,
    pub right: NodeStats<S>,
}

/// Running accumulators for one node: totals fixed, left side grows as the
/// sweep walks the sorted rows.
enum SplitAcc<S> {
    Class { left: Vec<S>, total: Vec<S> },
    // (weight, weighted sum, weighted sum of squares)
    Var { left: [S; 3], total: [S; 3] },
    Newton { left: [S; 2], total: [S; 2], lambda: S, gamma: S },
}

impl<S: Scalar> SplitAcc<S> {
    fn new(
        criterion: &Criterion<S>,
        targets: &TreeTargets<S>,
        weights: &[S],
        rows: &[usize],
        n_classes: usize,
    ) -> Result<Self> {
        match (criterion, targets) {
            (Criterion::Gini | Criterion::Entropy, TreeTargets::Classes(classes)) => {
                let mut total = vec![S::zero(); n_classes];
                for &r in rows {
                    total[classes[r]] = total[classes[r]] + weights[r];
                }
                Ok(SplitAcc::Class { left: vec![S::zero(); n_classes], total })
            }
            (Criterion::Variance, TreeTargets::Values(values)) => {
                let mut total = [S::zero(); 3];
                for &r in rows {
                    let (w, y) = (weights[r], values[r]);
                    total[0] = total[0] + w;
                    total[1] = total[1] + w * y;
                    total[2] = total[2] + w * y * y;
                }
                Ok(SplitAcc::Var { left: [S::zero(); 3], total })
            }
            (Criterion::SecondOrder { lambda, gamma }, TreeTargets::GradHess { grad, hess }) => {
                let mut total = [S::zero(); 2];
                for &r in rows {
                    total[0] = total[0] + weights[r] * grad[r];
                    total[1] = total[1] + weights[r] * hess[r];
                }
                Ok(SplitAcc::Newton { left: [S::zero(); 2], total, lambda: *lambda, gamma: *gamma })
            }
            _ => Err(Error::Parameter("criterion does not match the target kind".into())),
        }
    }

    fn reset_left(&mut self) {
        match self {
            SplitAcc::Class { left, .. } => left.iter_mut().for_each(|w| *w = S::zero()),
            SplitAcc::Var { left, .. } => *left = [S::zero(); 3],
            SplitAcc::Newton { left, .. } => *left = [S::zero(); 2],
        }
    }

    fn push_left(&mut self, targets: &TreeTargets<S>, weights: &[S], row: usize) {
        match (self, targets) {
            (SplitAcc::Class { left, .. }, TreeTargets::Classes(classes)) => {
                left[classes[row]] = left[classes[row]] + weights[row];
            }
            (SplitAcc::Var { left, .. }, TreeTargets::Values(values)) => {
                let (w, y) = (weights[row], values[row]);
                left[0] = left[0] + w;
                left[1] = left[1] + w * y;
                left[2] = left[2] + w * y * y;
            }
            (SplitAcc::Newton { left, .. }, TreeTargets::GradHess { grad, hess }) => {
                left[0] = left[0] + weights[row] * grad[row];
                left[1] = left[1] + weights[row] * hess[row];
            }
            _ => unreachable!("accumulator matches targets by construction"),
        }
    }

    /// Gain of the current left/right division, or None when a side carries
    /// no weight or the gain is invalid for the criterion.
    fn gain(&self, criterion: &Criterion<S>) -> Option<S> {
        match self {
            SplitAcc::Class { left, total } => {
                let wl: S = left.iter().copied().sum();
                let wt: S = total.iter().copied().sum();
                let wr = wt - wl;
                if !(wl > S::zero() && wr > S::zero()) {
                    return None;
                }
                let right: Vec<S> = total.iter().zip(left).map(|(&t, &l)| t - l).collect();
                let imp = |w: &[S], total_w: S| -> S {
                    match criterion {
                        Criterion::Gini => {
                            S::one()
                                - w.iter()
                                    .map(|&x| {
                                        let p = x / total_w;
                                        p * p
                                    })
                                    .sum()
                        }
                        Criterion::Entropy => w
                            .iter()
                            .map(|&x| {
                                let p = x / total_w;
                                if p > S::zero() {
                                    -p * p.log2()
                                } else {
                                    S::zero()
                                }
                            })
                            .sum(),
                        _ => unreachable!("classification accumulator with non-impurity criterion"),
                    }
                };
                let parent_imp = imp(total, wt);
                let child = (wl * imp(left, wl) + wr * imp(&right, wr)) / wt;
                Some((parent_imp - child).max(S::zero()))
            }
            SplitAcc::Var { left, total } => {
                let [wl, syl, sy2l] = *left;
                let [wt, syt, sy2t] = *total;
                let wr = wt - wl;
                if !(wl > S::zero() && wr > S::zero()) {
                    return None;
                }
                let var = |w: S, sy: S, sy2: S| (sy2 - sy * sy / w) / w;
                let parent = var(wt, syt, sy2t);
                let child = (wl * var(wl, syl, sy2l) + wr * var(wr, syt - syl, sy2t - sy2l)) / wt;
                Some((parent - child).max(S::zero()))
            }
            SplitAcc::Newton { left, total, lambda, gamma } => {
                let [gl, hl] = *left;
                let [gt, ht] = *total;
                let (gr, hr) = (gt - gl, ht - hl);
                let score = |g: S, h: S| g * g / (h + *lambda);
                let gain = S::half() * (score(gl, hl) + score(gr, hr) - score(gt, ht)) - *gamma;
                gain.is_finite().then_some(gain)
            }
        }
    }

    fn side_stats(&self) -> (NodeStats<S>, NodeStats<S>) {
        match self {
            SplitAcc::Class { left, total } => {
                let right: Vec<S> = total.iter().zip(left).map(|(&t, &l)| t - l).collect();
                (
                    NodeStats::Distribution(ClassDistribution::new(left.clone())),
                    NodeStats::Distribution(ClassDistribution::new(right)),
                )
            }
            SplitAcc::Var { left, total } => {
                let [wl, syl, _] = *left;
                let [wt, syt, _] = *total;
                (
                    NodeStats::Moments { weight: wl, mean: syl / wl },
                    NodeStats::Moments { weight: wt - wl, mean: (syt - syl) / (wt - wl) },
                )
            }
            SplitAcc::Newton { left, total, .. } => (
                NodeStats::Gradient { grad_sum: left[0], hess_sum: left[1] },
                NodeStats::Gradient { grad_sum: total[0] - left[0], hess_sum: total[1] - left[1] },
            ),
        }
    }
}

fn accepts<S: Scalar>(criterion: &Criterion<S>, gain: S) -> bool {
    match criterion {
        // zero-gain splits are allowed; they are what lets a tree work
        // through XOR-like structure where no single split helps
        Criterion::Gini | Criterion::Entropy | Criterion::Variance => gain >= S::zero(),
        Criterion::SecondOrder { .. } => gain > S::zero(),
    }
}

/// Best split over the candidate features, or None when no structurally
/// valid, acceptable split exists.
pub fn best_split<S: Scalar>(
    features: &Matrix<S>,
    targets: &TreeTargets<S>,
    weights: &[S],
    rows: &[usize],
    candidate_features: &[usize],
    config: &TreeConfig<S>,
) -> Result<Option<SplitCandidate<S>>> {
    let mut rng = rng_from(config.seed);
    best_split_with_rng(features, targets, weights, rows, candidate_features, config, &mut rng)
}

fn best_split_with_rng<S: Scalar>(
    features: &Matrix<S>,
    targets: &TreeTargets<S>,
    weights: &[S],
    rows: &[usize],
    candidate_features: &[usize],
    config: &TreeConfig<S>,
    rng: &mut ChaCha8Rng,
) -> Result<Option<SplitCandidate<S>>> {
    if rows.len() < config.min_samples_split {
        return Ok(None);
    }
    debug_assert!(rows.iter().all(|&r| weights[r] >= S::zero()));
    let n_classes = match targets {
        TreeTargets::Classes(t) => rows.iter().map(|&r| t[r] + 1).max().unwrap_or(2).max(2),
        _ => 0,
    };
    let mut acc = SplitAcc::new(&config.criterion, targets, weights, rows, n_classes)?;

    let mut best: Option<SplitCandidate<S>> = None;
    let mut consider = |acc: &SplitAcc<S>, feature: usize, threshold: S| {
        if let Some(gain) = acc.gain(&config.criterion) {
            if accepts(&config.criterion, gain)
                && best.as_ref().is_none_or(|b| gain > b.gain)
            {
                let (left, right) = acc.side_stats();
                best = Some(SplitCandidate { feature_index: feature, threshold, gain, left, right });
            }
        }
    };

    for &feature in candidate_features {
        match config.threshold_mode {
            ThresholdMode::Best => {
                let mut order: Vec<usize> = rows.to_vec();
                order.sort_by(|&a, &b| {
                    features
                        .get(a, feature)
                        .partial_cmp(&features.get(b, feature))
                        .expect("feature values must not be NaN")
                });
                acc.reset_left();
                for pos in 1..order.len() {
                    acc.push_left(targets, weights, order[pos - 1]);
                    let prev = features.get(order[pos - 1], feature);
                    let here = features.get(order[pos], feature);
                    if here > prev
                        && pos >= config.min_samples_leaf
                        && order.len() - pos >= config.min_samples_leaf
                    {
                        consider(&acc, feature, (prev + here) * S::half());
                    }
                }
            }
            ThresholdMode::Random => {
                let mut lo = features.get(rows[0], feature);
                let mut hi = lo;
                for &r in &rows[1..] {
                    let v = features.get(r, feature);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                // the draw happens whether or not the feature is usable, so
                // the stream stays aligned across candidate sets
                let u: f64 = rng.random();
                if hi > lo {
                    let threshold = lo + S::cast(u) * (hi - lo);
                    acc.reset_left();
                    let mut n_left = 0usize;
                    for &r in rows {
                        if features.get(r, feature) <= threshold {
                            acc.push_left(targets, weights, r);
                            n_left += 1;
                        }
                    }
                    if n_left >= config.min_samples_leaf
                        && rows.len() - n_left >= config.min_samples_leaf
                    {
                        consider(&acc, feature, threshold);
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Fit a tree on all rows.
pub fn fit_tree<S: Scalar>(
    features: &Matrix<S>,
    targets: &TreeTargets<S>,
    weights: &[S],
    config: &TreeConfig<S>,
) -> Result<DecisionTree<S>> {
    let rows: Vec<usize> = (0..features.n_rows()).collect();
    fit_tree_on(features, targets, weights, &rows, config)
}

/// Fit a tree on a row multiset (repeats allowed, e.g. bootstrap samples).
pub fn fit_tree_on<S: Scalar>(
    features: &Matrix<S>,
    targets: &TreeTargets<S>,
    weights: &[S],
    rows: &[usize],
    config: &TreeConfig<S>,
) -> Result<DecisionTree<S>> {
    config.validate()?;
    if rows.is_empty() || features.n_rows() == 0 {
        return Err(Error::Shape("cannot fit a tree on zero rows".into()));
    }
    if targets.len() != features.n_rows() || weights.len() != features.n_rows() {
        return Err(Error::Shape("features, targets and weights must have equal length".into()));
    }
    let n_classes = match targets {
        TreeTargets::Classes(t) => {
            if let Some(&bad) = rows.iter().map(|&r| &t[r]).find(|&&c| c > 64) {
                return Err(Error::Shape(format!("implausible class index {bad}")));
            }
            rows.iter().map(|&r| t[r] + 1).max().unwrap().max(2)
        }
        TreeTargets::Values(v) => {
            if rows.iter().any(|&r| !v[r].is_finite()) {
                return Err(Error::Shape("regression targets must be finite".into()));
            }
            0
        }
        TreeTargets::GradHess { grad, hess } => {
            if rows.iter().any(|&r| !grad[r].is_finite() || !hess[r].is_finite()) {
                return Err(Error::Shape("gradient statistics must be finite".into()));
            }
            0
        }
    };

    let mut builder = TreeBuilder {
        features,
        targets,
        weights,
        config,
        n_classes,
        n_candidates: config.max_features.resolve(features.n_cols())?,
        nodes: Vec::new(),
    };
    builder.grow(rows.to_vec(), 0)?;
    Ok(DecisionTree {
        nodes: builder.nodes,
        mode: if config.criterion.is_classification() {
            TreeMode::Classification
        } else {
            TreeMode::Regression
        },
        criterion: config.criterion,
        n_features: features.n_cols(),
        n_classes,
    })
}

struct TreeBuilder<'a, S: Scalar> {
    features: &'a Matrix<S>,
    targets: &'a TreeTargets<'a, S>,
    weights: &'a [S],
    config: &'a TreeConfig<S>,
    n_classes: usize,
    n_candidates: usize,
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> TreeBuilder<'_, S> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> Result<usize> {
        let node_id = self.nodes.len();
        let stats = self.node_stats(&rows);

        let depth_reached = self.config.max_depth.is_some_and(|d| depth >= d);
        let too_small = rows.len() < self.config.min_samples_split;
        if depth_reached || too_small || self.is_pure(&rows) {
            self.nodes.push(Node::Leaf(stats));
            return Ok(node_id);
        }

        // candidate features and random thresholds depend only on
        // (config.seed, preorder node id), never on thread schedule
        let mut rng = rng_from(derive_seed(self.config.seed, node_id as u64));
        let candidates = sample_indices(&mut rng, self.features.n_cols(), self.n_candidates);
        let split = best_split_with_rng(
            self.features,
            self.targets,
            self.weights,
            &rows,
            &candidates,
            self.config,
            &mut rng,
        )?;

        let Some(split) = split else {
            self.nodes.push(Node::Leaf(stats));
            return Ok(node_id);
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.features.get(r, split.feature_index) <= split.threshold);
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        self.nodes.push(Node::Internal {
            feature: split.feature_index,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let left = self.grow(left_rows, depth + 1)?;
        let right = self.grow(right_rows, depth + 1)?;
        if let Node::Internal { left: l, right: r, .. } = &mut self.nodes[node_id] {
            *l = left;
            *r = right;
        }
        Ok(node_id)
    }

    fn node_stats(&self, rows: &[usize]) -> LeafValue<S> {
        match self.targets {
            TreeTargets::Classes(classes) => {
                let mut dist = ClassDistribution::zeros(self.n_classes);
                for &r in rows {
                    dist.weights[classes[r]] = dist.weights[classes[r]] + self.weights[r];
                }
                LeafValue::Distribution(dist)
            }
            TreeTargets::Values(values) => {
                let mut w = S::zero();
                let mut wy = S::zero();
                for &r in rows {
                    w = w + self.weights[r];
                    wy = wy + self.weights[r] * values[r];
                }
                LeafValue::Value(if w > S::zero() { wy / w } else { S::zero() })
            }
            TreeTargets::GradHess { grad, hess } => {
                let mut g = S::zero();
                let mut h = S::zero();
                for &r in rows {
                    g = g + self.weights[r] * grad[r];
                    h = h + self.weights[r] * hess[r];
                }
                let lambda = match self.config.criterion {
                    Criterion::SecondOrder { lambda, .. } => lambda,
                    _ => S::zero(),
                };
                let denom = h + lambda;
                let value = if denom > S::zero() { -g / denom } else { S::zero() };
                LeafValue::Newton { value, grad_sum: g, hess_sum: h }
            }
        }
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        match self.targets {
            TreeTargets::Classes(classes) => {
                let mut seen: Option<usize> = None;
                for &r in rows {
                    if !(self.weights[r] > S::zero()) {
                        continue;
                    }
                    match seen {
                        None => seen = Some(classes[r]),
                        Some(c) if c != classes[r] => return false,
                        _ => {}
                    }
                }
                true
            }
            TreeTargets::Values(values) => {
                rows.windows(2).all(|w| values[w[0]] == values[w[1]])
            }
            // boosting decides via the gain rule instead
            TreeTargets::GradHess { .. } => false,
        }
    }
}
