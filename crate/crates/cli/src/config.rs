//! Experiment configuration: a TOML document with dotted sections, strictly
//! validated (unknown keys are errors, silent misconfiguration would poison
//! any reproduction claim). The resolved config hashes into the model-file
//! fingerprint.
//!
//! Every key is optional; the built-in defaults encode the standard
//! protocol: z 3.0, 80/20 split, 5 folds, seed 42, full nine-learner roster,
//! probability-based metrics, leakage-safe pipeline order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use tabstack::dataset::FeatureSchema;
use tabstack::metrics::MetricsMode;
use tabstack::model::{BaseLearnerKind, BaseLearnerSpec, LearnerParams, ROSTER};
use tabstack::rng::derive_seed;
use tabstack::tree::{Criterion, MaxFeatures};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineOrder {
    /// Outlier statistics come from training rows only, after the split.
    #[default]
    Safe,
    /// Outliers are filtered on the full dataset before splitting, matching
    /// the protocol some published pipelines use.
    Paper,
}

/// The raw TOML shape. Everything is optional; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    dataset: Option<RawDataset>,
    pipeline: Option<RawPipeline>,
    metrics: Option<RawMetrics>,
    roster: Option<RawRoster>,
    learners: Option<RawLearners>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    path: Option<PathBuf>,
    /// canonical column name -> header name in the file
    columns: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPipeline {
    z_threshold: Option<f64>,
    order: Option<PipelineOrder>,
    test_fraction: Option<f64>,
    k_folds: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetrics {
    mode: Option<MetricsMode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoster {
    members: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLearners {
    rf: Option<RawForest>,
    etc: Option<RawForest>,
    adb: Option<RawAdaBoost>,
    gbm: Option<RawGbm>,
    xgb: Option<RawXgb>,
    knn: Option<RawKnn>,
    svc: Option<RawLinear>,
    mlp: Option<RawMlp>,
    cart: Option<RawCart>,
}

// `max_depth = 0` means unlimited throughout.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForest {
    n_trees: Option<usize>,
    max_features: Option<toml::Value>,
    max_depth: Option<usize>,
    min_samples_split: Option<usize>,
    min_samples_leaf: Option<usize>,
    criterion: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdaBoost {
    n_stages: Option<usize>,
    max_depth: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGbm {
    n_stages: Option<usize>,
    learning_rate: Option<f64>,
    max_depth: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawXgb {
    n_stages: Option<usize>,
    learning_rate: Option<f64>,
    lambda: Option<f64>,
    gamma: Option<f64>,
    max_depth: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKnn {
    k: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinear {
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    l2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMlp {
    hidden_size: Option<usize>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCart {
    criterion: Option<String>,
    max_depth: Option<usize>,
    min_samples_split: Option<usize>,
    min_samples_leaf: Option<usize>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paper_order: bool,
    pub paper_metrics: bool,
    pub data: Option<PathBuf>,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub dataset_path: Option<PathBuf>,
    pub column_renames: Vec<(String, String)>,
    pub z_threshold: f64,
    pub order: PipelineOrder,
    pub test_fraction: f64,
    pub k_folds: usize,
    pub seed: u64,
    pub metrics_mode: MetricsMode,
    pub roster: Vec<BaseLearnerSpec<f64>>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let raw = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str::<RawConfig>(&text)
                    .map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))?
            }
            None => RawConfig::default(),
        };
        Self::resolve(raw, overrides)
    }

    fn resolve(raw: RawConfig, overrides: &Overrides) -> CliResult<Self> {
        let seed = overrides.seed.or(raw.seed).unwrap_or(42);
        let pipeline = raw.pipeline.unwrap_or_default();
        let metrics = raw.metrics.unwrap_or_default();
        let dataset = raw.dataset.unwrap_or_default();

        let z_threshold = pipeline.z_threshold.unwrap_or(3.0);
        if !(z_threshold > 0.0) {
            return Err(CliError::Config(format!(
                "pipeline.z_threshold must be positive, got {z_threshold}"
            )));
        }
        let test_fraction = pipeline.test_fraction.unwrap_or(0.2);
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "pipeline.test_fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        let k_folds = pipeline.k_folds.unwrap_or(5);
        if k_folds < 2 {
            return Err(CliError::Config(format!(
                "pipeline.k_folds must be at least 2, got {k_folds}"
            )));
        }
        let order = if overrides.paper_order {
            PipelineOrder::Paper
        } else {
            pipeline.order.unwrap_or_default()
        };
        let metrics_mode = if overrides.paper_metrics {
            MetricsMode::Paper
        } else {
            metrics.mode.unwrap_or_default()
        };

        let member_names: Vec<String> = match raw.roster.and_then(|r| r.members) {
            Some(names) => names,
            None => ROSTER.iter().map(|k| k.name().to_string()).collect(),
        };
        if member_names.is_empty() {
            return Err(CliError::Config("roster.members must not be empty".into()));
        }
        let mut kinds = Vec::new();
        for name in &member_names {
            let kind = BaseLearnerKind::parse(name)
                .map_err(|e| CliError::Config(e.to_string()))?;
            if kinds.contains(&kind) {
                return Err(CliError::Config(format!("duplicate roster member \"{name}\"")));
            }
            kinds.push(kind);
        }

        let learners = raw.learners.unwrap_or_default();
        let roster = kinds
            .into_iter()
            .map(|kind| build_spec(kind, seed, &learners))
            .collect::<CliResult<Vec<_>>>()?;

        Ok(Self {
            dataset_path: overrides.data.clone().or(dataset.path),
            column_renames: dataset
                .columns
                .map(|m| m.into_iter().collect())
                .unwrap_or_default(),
            z_threshold,
            order,
            test_fraction,
            k_folds,
            seed,
            metrics_mode,
            roster,
        })
    }

    pub fn require_dataset(&self) -> CliResult<&Path> {
        self.dataset_path.as_deref().ok_or_else(|| {
            CliError::Config(
                "no dataset given: set dataset.path in the config or pass --data".into(),
            )
        })
    }

    pub fn schema(&self) -> CliResult<FeatureSchema> {
        FeatureSchema::heart_default()
            .with_renames(&self.column_renames)
            .map_err(CliError::Core)
    }

    /// SHA-256 over the canonical JSON encoding of the resolved config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

fn depth(raw: Option<usize>, default: Option<usize>) -> Option<usize> {
    match raw {
        None => default,
        Some(0) => None,
        Some(d) => Some(d),
    }
}

fn parse_max_features(value: &toml::Value) -> CliResult<MaxFeatures> {
    match value {
        toml::Value::String(s) => match s.as_str() {
            "all" => Ok(MaxFeatures::All),
            "sqrt" => Ok(MaxFeatures::Sqrt),
            other => Err(CliError::Config(format!(
                "max_features must be \"all\", \"sqrt\", or a count, got \"{other}\""
            ))),
        },
        toml::Value::Integer(n) if *n > 0 => Ok(MaxFeatures::Count(*n as usize)),
        other => Err(CliError::Config(format!("invalid max_features: {other}"))),
    }
}

fn parse_criterion(name: &str) -> CliResult<Criterion<f64>> {
    match name {
        "gini" => Ok(Criterion::Gini),
        "entropy" => Ok(Criterion::Entropy),
        other => Err(CliError::Config(format!(
            "criterion must be \"gini\" or \"entropy\", got \"{other}\""
        ))),
    }
}

fn build_spec(
    kind: BaseLearnerKind,
    experiment_seed: u64,
    learners: &RawLearners,
) -> CliResult<BaseLearnerSpec<f64>> {
    let canonical_index =
        ROSTER.iter().position(|k| *k == kind).expect("kind comes from the roster") as u64;
    let seed = derive_seed(experiment_seed, 101 + canonical_index);
    let mut spec = BaseLearnerSpec::with_defaults(kind, seed);

    match (&mut spec.params, kind) {
        (LearnerParams::RandomForest(c), _) | (LearnerParams::ExtraTrees(c), _) => {
            let raw = match kind {
                BaseLearnerKind::Rf => &learners.rf,
                _ => &learners.etc,
            };
            if let Some(raw) = raw {
                if let Some(n) = raw.n_trees {
                    c.n_trees = n;
                }
                if let Some(v) = &raw.max_features {
                    c.max_features = parse_max_features(v)?;
                }
                c.max_depth = depth(raw.max_depth, c.max_depth);
                if let Some(v) = raw.min_samples_split {
                    c.min_samples_split = v;
                }
                if let Some(v) = raw.min_samples_leaf {
                    c.min_samples_leaf = v;
                }
                if let Some(name) = &raw.criterion {
                    c.criterion = parse_criterion(name)?;
                }
            }
        }
        (LearnerParams::AdaBoost(c), _) => {
            if let Some(raw) = &learners.adb {
                if let Some(v) = raw.n_stages {
                    c.n_stages = v;
                }
                if let Some(v) = raw.max_depth {
                    c.max_depth = v;
                }
            }
        }
        (LearnerParams::Gbm(c), _) => {
            if let Some(raw) = &learners.gbm {
                if let Some(v) = raw.n_stages {
                    c.n_stages = v;
                }
                if let Some(v) = raw.learning_rate {
                    c.learning_rate = v;
                }
                c.max_depth = depth(raw.max_depth, c.max_depth);
            }
        }
        (LearnerParams::Xgb(c), _) => {
            if let Some(raw) = &learners.xgb {
                if let Some(v) = raw.n_stages {
                    c.n_stages = v;
                }
                if let Some(v) = raw.learning_rate {
                    c.learning_rate = v;
                }
                if let Some(v) = raw.lambda {
                    c.lambda = v;
                }
                if let Some(v) = raw.gamma {
                    c.gamma = v;
                }
                c.max_depth = depth(raw.max_depth, c.max_depth);
            }
        }
        (LearnerParams::Knn { k }, _) => {
            if let Some(raw) = &learners.knn {
                if let Some(v) = raw.k {
                    *k = v;
                }
            }
        }
        (LearnerParams::Svc(c), _) => {
            if let Some(raw) = &learners.svc {
                if let Some(v) = raw.epochs {
                    c.epochs = v;
                }
                if let Some(v) = raw.learning_rate {
                    c.learning_rate = v;
                }
                if let Some(v) = raw.l2 {
                    c.l2 = v;
                }
            }
        }
        (LearnerParams::Mlp(c), _) => {
            if let Some(raw) = &learners.mlp {
                if let Some(v) = raw.hidden_size {
                    c.hidden_size = v;
                }
                if let Some(v) = raw.epochs {
                    c.epochs = v;
                }
                if let Some(v) = raw.learning_rate {
                    c.learning_rate = v;
                }
            }
        }
        (LearnerParams::Cart(c), _) => {
            if let Some(raw) = &learners.cart {
                if let Some(name) = &raw.criterion {
                    c.criterion = parse_criterion(name)?;
                }
                c.max_depth = depth(raw.max_depth, c.max_depth);
                if let Some(v) = raw.min_samples_split {
                    c.min_samples_split = v;
                }
                if let Some(v) = raw.min_samples_leaf {
                    c.min_samples_leaf = v;
                }
            }
        }
        (LearnerParams::Logistic(_), _) => {
            unreachable!("logistic regression is the meta-learner, not a roster member")
        }
    }
    Ok(spec)
}
