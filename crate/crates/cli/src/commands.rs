//! The pipeline commands: prep, train, evaluate, cv, report, predict.
//!
//! Pipeline order matters and is configurable. The leakage-safe default
//! splits first and fits the outlier filter and standardizer on training
//! rows only; `--paper-order` instead filters outliers on the full dataset
//! before splitting, reproducing the order some published pipelines use.

use std::path::Path;

use serde::Serialize;

use tabstack::dataset::{
    fit_standardizer, load_csv, load_csv_features, stratified_kfold, train_test_split_stratified,
    write_csv, ColumnKind, LabeledDataset, Standardizer, ZscoreFilter,
};
use tabstack::metrics::{evaluate_all, confusion, hard_predictions, roc_curve, MetricsMode};
use tabstack::model::TrainedModel;
use tabstack::persist::{load_model, save_model, Fingerprint, ModelFile, MODEL_FILE_VERSION};
use tabstack::rng::derive_seed;
use tabstack::stacking::{fit_stacked_ensemble, StackedModel};

use crate::config::{ExperimentConfig, PipelineOrder};
use crate::error::{CliError, CliResult};
use crate::results::{
    write_report, ModelResult, RecordPrediction, ReportFormat, ResultsFile, ResultsSource,
    ScatterData,
};

type Dataset = LabeledDataset<f64>;

/// Sidecar summary written by `prep`.
#[derive(Debug, Serialize)]
struct PrepSummary {
    rows_read: usize,
    rows_written: usize,
    missing_dropped: Vec<usize>,
    outliers_removed: Vec<usize>,
    z_threshold: f64,
    column_statistics: Vec<ColumnSummary>,
}

#[derive(Debug, Serialize)]
struct ColumnSummary {
    name: String,
    mean: f64,
    stddev: f64,
}

/// Clean a CSV: drop rows with missing cells, remove |z| > threshold
/// outliers (statistics over the full input), write the cleaned CSV plus a
/// JSON sidecar summary.
pub fn cmd_prep(
    config: &ExperimentConfig,
    input: &Path,
    output: &Path,
    summary_path: Option<&Path>,
    z_threshold: Option<f64>,
) -> CliResult<()> {
    let schema = config.schema()?;
    let threshold = z_threshold.unwrap_or(config.z_threshold);
    let load = load_csv::<f64>(input, &schema)?;
    let rows_read = load.dataset.n_rows() + load.missing_dropped.len();

    let filter = ZscoreFilter::fit(&load.dataset, threshold)?;
    let (kept, removed) = filter.apply(&load.dataset);
    if kept.n_rows() == 0 {
        return Err(CliError::Core(tabstack::Error::Shape(
            "outlier filter removed every row; nothing to write".into(),
        )));
    }
    write_csv(&kept, output)?;

    let summary = PrepSummary {
        rows_read,
        rows_written: kept.n_rows(),
        missing_dropped: load.missing_dropped,
        outliers_removed: removed,
        z_threshold: threshold,
        column_statistics: filter
            .stats
            .iter()
            .map(|s| ColumnSummary {
                name: schema.columns[s.column].name.clone(),
                mean: s.mean,
                stddev: s.stddev,
            })
            .collect(),
    };
    let default_summary = output.with_extension("summary.json");
    let summary_path = summary_path.unwrap_or(&default_summary);
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Input(format!("cannot serialize summary: {e}")))?;
    std::fs::write(summary_path, json).map_err(tabstack::Error::Io)?;

    println!(
        "prep: read {} rows, dropped {} with missing cells, removed {} outliers (|z| > {}), wrote {} rows to {}",
        summary.rows_read,
        summary.missing_dropped.len(),
        summary.outliers_removed.len(),
        threshold,
        summary.rows_written,
        output.display()
    );
    Ok(())
}

/// Split + filter + standardize, honoring the configured pipeline order.
/// Returns (standardized train, raw filtered train, raw test, standardizer,
/// removed outlier row ids).
fn prepare_split(
    data: &Dataset,
    config: &ExperimentConfig,
) -> CliResult<(Dataset, Dataset, Dataset, Standardizer<f64>, Vec<usize>)> {
    let (working, mut removed) = match config.order {
        PipelineOrder::Paper => {
            let filter = ZscoreFilter::fit(data, config.z_threshold)?;
            let (kept, removed) = filter.apply(data);
            (kept, removed)
        }
        PipelineOrder::Safe => (data.clone(), Vec::new()),
    };
    let split = train_test_split_stratified(&working, config.test_fraction, config.seed)?;
    let mut raw_train = working.select(&split.train);
    let raw_test = working.select(&split.test);

    if config.order == PipelineOrder::Safe {
        let filter = ZscoreFilter::fit(&raw_train, config.z_threshold)?;
        let (kept, train_removed) = filter.apply(&raw_train);
        raw_train = kept;
        removed = train_removed;
    }
    if raw_train.n_rows() == 0 {
        return Err(CliError::Core(tabstack::Error::Shape(
            "no training rows left after outlier filtering".into(),
        )));
    }
    let standardizer = fit_standardizer(&raw_train)?;
    let train = standardizer.transform(&raw_train)?;
    Ok((train, raw_train, raw_test, standardizer, removed))
}

/// Train the stacked ensemble and persist it; optionally export the raw
/// train/test splits for later evaluation.
pub fn cmd_train(
    config: &ExperimentConfig,
    model_out: &Path,
    test_out: Option<&Path>,
    train_out: Option<&Path>,
) -> CliResult<()> {
    let path = config.require_dataset()?;
    let schema = config.schema()?;
    let load = load_csv::<f64>(path, &schema)?;
    let (train, raw_train, raw_test, standardizer, removed) = prepare_split(&load.dataset, config)?;

    let stack = fit_stacked_ensemble(&train, &config.roster, config.k_folds, config.seed)?;

    let file = ModelFile {
        format_version: MODEL_FILE_VERSION,
        fingerprint: Fingerprint {
            config_hash: config.hash(),
            dataset_rows: load.dataset.n_rows(),
            seed: config.seed,
        },
        schema,
        standardizer,
        model: TrainedModel::Stacked(stack),
    };
    save_model(&file, model_out)?;
    if let Some(out) = test_out {
        write_csv(&raw_test, out)?;
    }
    if let Some(out) = train_out {
        write_csv(&raw_train, out)?;
    }

    println!(
        "train: {} rows loaded, {} outliers removed, {} train / {} test, {}-learner stack with k={} folds, model written to {}",
        load.dataset.n_rows(),
        removed.len(),
        raw_train.n_rows(),
        raw_test.n_rows(),
        config.roster.len(),
        config.k_folds,
        model_out.display()
    );
    Ok(())
}

/// Pick two feature columns for the scatter export: age and max heart rate
/// when the schema has them, otherwise the first two numeric columns,
/// otherwise the first two columns.
fn scatter_columns(data: &Dataset) -> (usize, usize) {
    let by_name = |name: &str| {
        data.schema
            .columns
            .iter()
            .position(|c| c.name.eq_ignore_ascii_case(name))
    };
    if let (Some(x), Some(y)) = (by_name("age"), by_name("max heart rate")) {
        return (x, y);
    }
    let numeric: Vec<usize> = data
        .schema
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == ColumnKind::Numeric)
        .map(|(i, _)| i)
        .collect();
    match numeric.as_slice() {
        [x, y, ..] => (*x, *y),
        _ => (0, 1.min(data.n_features().saturating_sub(1))),
    }
}

fn scatter_data(raw: &Dataset) -> ScatterData {
    let (x, y) = scatter_columns(raw);
    ScatterData {
        x_name: raw.schema.columns[x].name.clone(),
        y_name: raw.schema.columns[y].name.clone(),
        points: (0..raw.n_rows())
            .map(|i| (raw.row_ids[i], raw.features.get(i, x), raw.features.get(i, y)))
            .collect(),
    }
}

/// One evaluated model: metric row plus confusion, soft-score ROC points,
/// and per-record predictions.
fn model_result(
    name: &str,
    labels: &[u8],
    row_ids: &[usize],
    p1: &[f64],
    mode: MetricsMode,
) -> CliResult<ModelResult> {
    let row = evaluate_all(name, labels, p1, 0.5, mode)?;
    let hard = hard_predictions(p1, 0.5);
    Ok(ModelResult {
        row,
        fold_mean: None,
        fold_std: None,
        confusion: confusion(labels, &hard)?,
        roc: roc_curve(labels, p1)?,
        predictions: row_ids
            .iter()
            .zip(labels.iter().zip(p1.iter().zip(&hard)))
            .map(|(&row_id, (&label, (&p1, &predicted)))| RecordPrediction {
                row_id,
                label,
                p1,
                predicted,
            })
            .collect(),
    })
}

/// Evaluate the stack and every stored base learner on standardized rows.
fn evaluate_stack_and_bases(
    stack: &StackedModel<f64>,
    test: &Dataset,
    raw_test: &Dataset,
    mode: MetricsMode,
) -> CliResult<ResultsFile> {
    let mut models = Vec::with_capacity(stack.base_models.len() + 1);
    let stack_p1: Vec<f64> =
        stack.predict_proba(&test.features)?.iter().map(|p| p[1]).collect();
    models.push(model_result(
        "Stacked Classifier",
        &test.labels,
        &test.row_ids,
        &stack_p1,
        mode,
    )?);
    for (spec, model) in stack.base_specs.iter().zip(&stack.base_models) {
        let p1 = model.predict_p1(&test.features)?;
        models.push(model_result(spec.kind.name(), &test.labels, &test.row_ids, &p1, mode)?);
    }
    Ok(ResultsFile {
        source: ResultsSource::Holdout,
        metrics_mode: mode,
        models,
        scatter: scatter_data(raw_test),
    })
}

fn print_table(results: &ResultsFile) {
    print!("{}", crate::results::render_table_csv(results));
}

/// Evaluate a saved model on a test CSV, writing a results directory.
pub fn cmd_evaluate(
    config: &ExperimentConfig,
    model_path: &Path,
    test_path: &Path,
    out_dir: &Path,
) -> CliResult<()> {
    let file: ModelFile<f64> = load_model(model_path)?;
    let load = load_csv::<f64>(test_path, &file.schema)?;
    let test = file.standardizer.transform(&load.dataset)?;
    let TrainedModel::Stacked(stack) = &file.model else {
        return Err(CliError::Core(tabstack::Error::Model(
            "evaluate expects a stacked-ensemble model file".into(),
        )));
    };
    let results = evaluate_stack_and_bases(stack, &test, &load.dataset, config.metrics_mode)?;
    results.save(out_dir)?;
    print_table(&results);
    Ok(())
}

/// k-fold cross-validation of the stack and every roster member, with the
/// stack's own out-of-fold generation nested inside each outer fold.
pub fn cmd_cv(config: &ExperimentConfig, out_dir: &Path) -> CliResult<()> {
    let path = config.require_dataset()?;
    let schema = config.schema()?;
    let load = load_csv::<f64>(path, &schema)?;

    let working = match config.order {
        PipelineOrder::Paper => {
            let filter = ZscoreFilter::fit(&load.dataset, config.z_threshold)?;
            filter.apply(&load.dataset).0
        }
        PipelineOrder::Safe => load.dataset.clone(),
    };
    let outer = stratified_kfold(&working, config.k_folds, config.seed)?;

    let model_names: Vec<String> = std::iter::once("Stacked Classifier".to_string())
        .chain(config.roster.iter().map(|s| s.kind.name().to_string()))
        .collect();
    // pooled per-row predictions per model, indexed by row position
    let mut pooled: Vec<Vec<Option<RecordPrediction>>> =
        vec![vec![None; working.n_rows()]; model_names.len()];
    let mut fold_rows: Vec<Vec<tabstack::EvaluationRow>> =
        vec![Vec::new(); model_names.len()];

    for (f, fold) in outer.folds.iter().enumerate() {
        let complement = outer.complement(f);
        let mut raw_train = working.select(&complement);
        if config.order == PipelineOrder::Safe {
            let filter = ZscoreFilter::fit(&raw_train, config.z_threshold)?;
            raw_train = filter.apply(&raw_train).0;
        }
        let standardizer = fit_standardizer(&raw_train)?;
        let train = standardizer.transform(&raw_train)?;
        let raw_test = working.select(fold);
        let test = standardizer.transform(&raw_test)?;

        let stack = fit_stacked_ensemble(
            &train,
            &config.roster,
            config.k_folds,
            derive_seed(config.seed, 500 + f as u64),
        )?;

        let mut per_model_p1: Vec<Vec<f64>> = Vec::with_capacity(model_names.len());
        per_model_p1
            .push(stack.predict_proba(&test.features)?.iter().map(|p| p[1]).collect());
        for model in &stack.base_models {
            per_model_p1.push(model.predict_p1(&test.features)?);
        }

        for (m, p1) in per_model_p1.into_iter().enumerate() {
            let row = evaluate_all(&model_names[m], &test.labels, &p1, 0.5, config.metrics_mode)?;
            fold_rows[m].push(row);
            let hard = hard_predictions(&p1, 0.5);
            for (j, &pos) in fold.iter().enumerate() {
                pooled[m][pos] = Some(RecordPrediction {
                    row_id: working.row_ids[pos],
                    label: test.labels[j],
                    p1: p1[j],
                    predicted: hard[j],
                });
            }
        }
    }

    let mut models = Vec::with_capacity(model_names.len());
    for (m, name) in model_names.iter().enumerate() {
        let predictions: Vec<RecordPrediction> =
            pooled[m].iter().map(|p| p.clone().expect("folds cover every row")).collect();
        let labels: Vec<u8> = predictions.iter().map(|p| p.label).collect();
        let p1: Vec<f64> = predictions.iter().map(|p| p.p1).collect();
        let hard: Vec<u8> = predictions.iter().map(|p| p.predicted).collect();
        let pooled_row = evaluate_all(name, &labels, &p1, 0.5, config.metrics_mode)?;
        let (mean, std) = aggregate(&fold_rows[m], name);
        models.push(ModelResult {
            row: pooled_row,
            fold_mean: Some(mean),
            fold_std: Some(std),
            confusion: confusion(&labels, &hard)?,
            roc: roc_curve(&labels, &p1)?,
            predictions,
        });
    }

    let results = ResultsFile {
        source: ResultsSource::CrossValidation,
        metrics_mode: config.metrics_mode,
        models,
        scatter: scatter_data(&working),
    };
    results.save(out_dir)?;

    for model in &results.models {
        let mean = model.fold_mean.as_ref().expect("cv rows carry means");
        let std = model.fold_std.as_ref().expect("cv rows carry stds");
        println!(
            "{}: accuracy {:.6} ± {:.6}, f1 {:.6} ± {:.6}, mcc {:.6} ± {:.6}",
            model.row.model_name, mean.accuracy, std.accuracy, mean.f1, std.f1, mean.mcc, std.mcc
        );
    }
    Ok(())
}

/// Mean and sample standard deviation of per-fold metric rows.
fn aggregate(
    rows: &[tabstack::EvaluationRow],
    name: &str,
) -> (tabstack::EvaluationRow, tabstack::EvaluationRow) {
    let k = rows.len() as f64;
    let get = |f: fn(&tabstack::EvaluationRow) -> f64| -> (f64, f64) {
        let mean = rows.iter().map(f).sum::<f64>() / k;
        let var = if rows.len() > 1 {
            rows.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        (mean, var.sqrt())
    };
    let (acc, acc_s) = get(|r| r.accuracy);
    let (prc, prc_s) = get(|r| r.prc);
    let (sen, sen_s) = get(|r| r.sensitivity);
    let (spe, spe_s) = get(|r| r.specificity);
    let (f1, f1_s) = get(|r| r.f1);
    let (roc, roc_s) = get(|r| r.roc);
    let (ll, ll_s) = get(|r| r.log_loss);
    let (mcc, mcc_s) = get(|r| r.mcc);
    let degenerate = rows.iter().any(|r| r.degenerate);
    let build = |accuracy, prc, sensitivity, specificity, f1, roc, log_loss, mcc| {
        tabstack::EvaluationRow {
            model_name: name.to_string(),
            accuracy,
            prc,
            sensitivity,
            specificity,
            f1,
            roc,
            log_loss,
            mcc,
            degenerate,
        }
    };
    (
        build(acc, prc, sen, spe, f1, roc, ll, mcc),
        build(acc_s, prc_s, sen_s, spe_s, f1_s, roc_s, ll_s, mcc_s),
    )
}

/// Render report artifacts from a results directory.
pub fn cmd_report(results_dir: &Path, format: ReportFormat, out_dir: Option<&Path>) -> CliResult<()> {
    let results = ResultsFile::load(results_dir)?;
    let out = out_dir.unwrap_or(results_dir);
    write_report(&results, out, format)?;
    println!("report: wrote table, accuracy chart, confusion counts, ROC points, and prediction scatter to {}", out.display());
    Ok(())
}

/// Score new rows with a saved model. The target column is optional; when
/// present, it is echoed into the output for convenience.
pub fn cmd_predict(
    _config: &ExperimentConfig,
    model_path: &Path,
    input: &Path,
    output: &Path,
) -> CliResult<()> {
    let file: ModelFile<f64> = load_model(model_path)?;
    let load = load_csv_features::<f64>(input, &file.schema)?;
    let data = file.standardizer.transform(&load.dataset)?;
    let p = file.model.predict_proba(&data.features)?;

    let mut out = String::from(if load.had_target {
        "row_id,p1,predicted,label\n"
    } else {
        "row_id,p1,predicted\n"
    });
    for (i, p) in p.iter().enumerate() {
        let predicted = u8::from(p[1] >= 0.5);
        if load.had_target {
            out.push_str(&format!(
                "{},{},{},{}\n",
                data.row_ids[i], p[1], predicted, data.labels[i]
            ));
        } else {
            out.push_str(&format!("{},{},{}\n", data.row_ids[i], p[1], predicted));
        }
    }
    std::fs::write(output, out).map_err(tabstack::Error::Io)?;
    println!("predict: scored {} rows to {}", data.n_rows(), output.display());
    Ok(())
}
