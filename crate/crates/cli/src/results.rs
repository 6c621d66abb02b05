//! Results files and report emission. `evaluate` and `cv` both write one
//! `results.json` into their output directory; `report` renders it into the
//! metric table (CSV or markdown), accuracy-chart data, confusion counts,
//! ROC points, and the per-record prediction scatter.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use tabstack::metrics::{ConfusionMatrix, EvaluationRow, MetricsMode, RocCurve};

use crate::error::{CliError, CliResult};

pub const RESULTS_FILE: &str = "results.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultsSource {
    /// One held-out test split.
    Holdout,
    /// k-fold cross-validation; rows are pooled over held-out folds and the
    /// mean/std fields aggregate the per-fold metric rows.
    CrossValidation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordPrediction {
    pub row_id: usize,
    pub label: u8,
    pub p1: f64,
    pub predicted: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelResult {
    /// Metrics on the evaluated rows (pooled across folds for CV).
    pub row: EvaluationRow<f64>,
    /// Per-fold mean and standard deviation (CV only).
    pub fold_mean: Option<EvaluationRow<f64>>,
    pub fold_std: Option<EvaluationRow<f64>>,
    pub confusion: ConfusionMatrix,
    pub roc: RocCurve<f64>,
    pub predictions: Vec<RecordPrediction>,
}

/// Scatter export for the identification plot: each evaluated record at its
/// two chosen feature coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatterData {
    pub x_name: String,
    pub y_name: String,
    /// (row_id, x, y), aligned with the stacked model's predictions.
    pub points: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultsFile {
    pub source: ResultsSource,
    pub metrics_mode: MetricsMode,
    /// Stacked ensemble first, then roster order.
    pub models: Vec<ModelResult>,
    pub scatter: ScatterData,
}

impl ResultsFile {
    pub fn save(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir).map_err(tabstack::Error::Io)?;
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Input(format!("cannot serialize results: {e}")))?;
        std::fs::write(dir.join(RESULTS_FILE), json).map_err(tabstack::Error::Io)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(RESULTS_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Input(format!("no results at {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("malformed results file: {e}")))
    }
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

const METRIC_NAMES: [&str; 8] = [
    "Accuracy",
    "PRC",
    "Sensitivity",
    "Specificity",
    "F1 Score",
    "ROC",
    "Log_Loss",
    "MCC",
];

fn metric_values(row: &EvaluationRow<f64>) -> [f64; 8] {
    [
        row.accuracy,
        row.prc,
        row.sensitivity,
        row.specificity,
        row.f1,
        row.roc,
        row.log_loss,
        row.mcc,
    ]
}

/// The metric table as CSV. Holdout results get one column per metric; CV
/// results get mean and std columns per metric.
pub fn render_table_csv(results: &ResultsFile) -> String {
    let mut out = String::from("Model");
    let cv = results.source == ResultsSource::CrossValidation;
    for name in METRIC_NAMES {
        if cv {
            let _ = write!(out, ",{name}_mean,{name}_std");
        } else {
            let _ = write!(out, ",{name}");
        }
    }
    out.push('\n');
    for model in &results.models {
        out.push_str(&model.row.model_name);
        if cv {
            let mean = metric_values(model.fold_mean.as_ref().unwrap_or(&model.row));
            let std = model.fold_std.as_ref().map(metric_values).unwrap_or([0.0; 8]);
            for i in 0..8 {
                let _ = write!(out, ",{},{}", fmt6(mean[i]), fmt6(std[i]));
            }
        } else {
            for v in metric_values(&model.row) {
                let _ = write!(out, ",{}", fmt6(v));
            }
        }
        out.push('\n');
    }
    out
}

/// The metric table as a markdown pipe table.
pub fn render_table_md(results: &ResultsFile) -> String {
    let cv = results.source == ResultsSource::CrossValidation;
    let mut out = String::from("| Model |");
    for name in METRIC_NAMES {
        let _ = write!(out, " {name} |");
    }
    out.push('\n');
    out.push_str("|---|");
    out.push_str(&"---|".repeat(8));
    out.push('\n');
    for model in &results.models {
        let _ = write!(out, "| {} |", model.row.model_name);
        if cv {
            let mean = metric_values(model.fold_mean.as_ref().unwrap_or(&model.row));
            let std = model.fold_std.as_ref().map(metric_values).unwrap_or([0.0; 8]);
            for i in 0..8 {
                let _ = write!(out, " {} ± {} |", fmt6(mean[i]), fmt6(std[i]));
            }
        } else {
            for v in metric_values(&model.row) {
                let _ = write!(out, " {} |", fmt6(v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn render_accuracy_chart(results: &ResultsFile) -> String {
    let mut out = String::from("model,accuracy\n");
    for model in &results.models {
        let acc = match &model.fold_mean {
            Some(mean) => mean.accuracy,
            None => model.row.accuracy,
        };
        let _ = writeln!(out, "{},{}", model.row.model_name, fmt6(acc));
    }
    out
}

pub fn render_confusion_counts(results: &ResultsFile) -> String {
    let mut out = String::from("model,tp,fp,tn,fn\n");
    for model in &results.models {
        let cm = &model.confusion;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            model.row.model_name,
            cm.true_positives,
            cm.false_positives,
            cm.true_negatives,
            cm.false_negatives
        );
    }
    out
}

pub fn render_roc_points(results: &ResultsFile) -> String {
    let mut out = String::from("model,threshold,fpr,tpr\n");
    for model in &results.models {
        // points[0] is the (0,0) anchor with no finite threshold
        let (x0, y0) = model.roc.points[0];
        let _ = writeln!(out, "{},inf,{x0},{y0}", model.row.model_name);
        for (threshold, point) in model.roc.thresholds.iter().zip(&model.roc.points[1..]) {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                model.row.model_name, threshold, point.0, point.1
            );
        }
    }
    out
}

/// Per-record scatter rows joined with the stacked model's predictions (the
/// first model entry).
pub fn render_prediction_scatter(results: &ResultsFile) -> CliResult<String> {
    let stack = results
        .models
        .first()
        .ok_or_else(|| CliError::Input("results file contains no models".into()))?;
    if stack.predictions.len() != results.scatter.points.len() {
        return Err(CliError::Input(
            "scatter points and predictions are out of step".into(),
        ));
    }
    let mut out = format!(
        "row_id,{},{},label,predicted\n",
        results.scatter.x_name.replace(' ', "_"),
        results.scatter.y_name.replace(' ', "_")
    );
    for (point, pred) in results.scatter.points.iter().zip(&stack.predictions) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            point.0, point.1, point.2, pred.label, pred.predicted
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Md,
}

/// Write all five report artifacts for a results directory.
pub fn write_report(results: &ResultsFile, out_dir: &Path, format: ReportFormat) -> CliResult<()> {
    std::fs::create_dir_all(out_dir).map_err(tabstack::Error::Io)?;
    let table = match format {
        ReportFormat::Csv => ("table.csv", render_table_csv(results)),
        ReportFormat::Md => ("table.md", render_table_md(results)),
    };
    let files = [
        table,
        ("accuracy_chart.csv".into(), render_accuracy_chart(results)),
        ("confusion_counts.csv".into(), render_confusion_counts(results)),
        ("roc_points.csv".into(), render_roc_points(results)),
        ("prediction_scatter.csv".into(), render_prediction_scatter(results)?),
    ];
    for (name, content) in files {
        std::fs::write(out_dir.join(name), content).map_err(tabstack::Error::Io)?;
    }
    Ok(())
}
