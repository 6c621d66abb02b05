//! Dataset schema, CSV ingestion, preprocessing, and split/fold generation.
//!
//! The default schema is the combined heart-disease table: eleven features
//! (five numeric, six integer-coded nominal) and a 0/1 target. Ingestion
//! validates against the schema, z-score filtering removes outlier rows,
//! standardization centers and scales numeric columns, and the split/fold
//! helpers produce deterministic stratified partitions.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{rng_from, shuffle};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Nominal,
}

/// Optional validation constraint for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllowedRange {
    /// Closed interval for numeric columns.
    Interval { min: f64, max: f64 },
    /// Exact integer codes for nominal columns.
    Categories(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub range: Option<AllowedRange>,
}

impl ColumnSpec {
    pub fn numeric(name: &str) -> Self {
        Self { name: name.into(), kind: ColumnKind::Numeric, range: None }
    }

    pub fn numeric_in(name: &str, min: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
            range: Some(AllowedRange::Interval { min, max }),
        }
    }

    pub fn nominal(name: &str, codes: &[i64]) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Nominal,
            range: Some(AllowedRange::Categories(codes.to_vec())),
        }
    }
}

/// Ordered feature columns plus the binary target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<ColumnSpec>,
    pub target_name: String,
    pub positive_label: i64,
}

impl FeatureSchema {
    /// The combined heart-disease schema, in published column order.
    pub fn heart_default() -> Self {
        Self {
            columns: vec![
                ColumnSpec::numeric_in("age", 1.0, 120.0),
                ColumnSpec::nominal("sex", &[0, 1]),
                ColumnSpec::nominal("chest pain type", &[1, 2, 3, 4]),
                ColumnSpec::numeric_in("resting bp s", 0.0, 300.0),
                ColumnSpec::numeric_in("cholesterol", 0.0, 700.0),
                ColumnSpec::nominal("fasting blood sugar", &[0, 1]),
                ColumnSpec::nominal("resting ecg", &[0, 1, 2]),
                ColumnSpec::numeric_in("max heart rate", 40.0, 250.0),
                ColumnSpec::nominal("exercise angina", &[0, 1]),
                ColumnSpec::numeric_in("oldpeak", -10.0, 10.0),
                ColumnSpec::nominal("ST slope", &[0, 1, 2, 3]),
            ],
            target_name: "target".into(),
            positive_label: 1,
        }
    }

    /// Anonymous all-numeric schema, mostly for fixtures and tests.
    pub fn all_numeric(n_features: usize) -> Self {
        Self {
            columns: (0..n_features).map(|i| ColumnSpec::numeric(&format!("f{i}"))).collect(),
            target_name: "target".into(),
            positive_label: 1,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.columns.len()
    }

    pub fn numeric_indices(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ColumnKind::Numeric)
            .map(|(i, _)| i)
            .collect()
    }

    /// Rename columns, e.g. to match a CSV whose headers differ from the
    /// canonical names. Keys are canonical names, values the file's headers.
    pub fn with_renames(mut self, renames: &[(String, String)]) -> Result<Self> {
        for (canonical, actual) in renames {
            let canonical_norm = normalize(canonical);
            if normalize(&self.target_name) == canonical_norm {
                self.target_name = actual.clone();
                continue;
            }
            match self.columns.iter_mut().find(|c| normalize(&c.name) == canonical_norm) {
                Some(col) => col.name = actual.clone(),
                None => {
                    return Err(Error::Schema(format!(
                        "cannot rename unknown column \"{canonical}\""
                    )))
                }
            }
        }
        Ok(self)
    }
}

fn normalize(name: &str) -> String {
    name.trim().to_lowercase()
}

/// Feature matrix, binary labels, schema, and the original row ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset<S> {
    pub features: Matrix<S>,
    pub labels: Vec<u8>,
    pub schema: FeatureSchema,
    pub row_ids: Vec<usize>,
}

impl<S: Scalar> LabeledDataset<S> {
    pub fn new(
        features: Matrix<S>,
        labels: Vec<u8>,
        schema: FeatureSchema,
        row_ids: Vec<usize>,
    ) -> Result<Self> {
        if features.n_rows() != labels.len() || features.n_rows() != row_ids.len() {
            return Err(Error::Shape(format!(
                "rows ({}), labels ({}) and row_ids ({}) must agree",
                features.n_rows(),
                labels.len(),
                row_ids.len()
            )));
        }
        if features.n_rows() > 0 && features.n_cols() != schema.feature_count() {
            return Err(Error::Shape(format!(
                "matrix has {} columns but the schema describes {}",
                features.n_cols(),
                schema.feature_count()
            )));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::Shape("labels must contain only 0 and 1".into()));
        }
        if row_ids.iter().collect::<HashSet<_>>().len() != row_ids.len() {
            return Err(Error::Shape("row_ids must be unique".into()));
        }
        Ok(Self { features, labels, schema, row_ids })
    }

    /// Fixture constructor: numeric schema, row_ids 0..n.
    pub fn from_rows(rows: Vec<Vec<S>>, labels: Vec<u8>) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.len());
        let n = rows.len();
        Self::new(Matrix::from_rows(rows)?, labels, FeatureSchema::all_numeric(d), (0..n).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.schema.feature_count()
    }

    /// Subset by row positions (not row ids), keeping original row ids.
    pub fn select(&self, positions: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(positions),
            labels: positions.iter().map(|&i| self.labels[i]).collect(),
            schema: self.schema.clone(),
            row_ids: positions.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        [self.labels.len() - pos, pos]
    }
}

/// Ingestion result: the dataset plus the ids of rows dropped for having
/// empty cells. `had_target` records whether the file carried a target
/// column (always true for `load_csv`; labels are all 0 when it is false).
#[derive(Debug, Clone)]
pub struct CsvLoad<S> {
    pub dataset: LabeledDataset<S>,
    pub missing_dropped: Vec<usize>,
    pub had_target: bool,
}

/// Read a header-first CSV against a schema. Header names are matched
/// case-insensitively after trimming; rows with empty cells are dropped and
/// reported; any unparseable or out-of-range cell is an error naming the
/// 1-based file line.
pub fn load_csv<S: Scalar>(path: &Path, schema: &FeatureSchema) -> Result<CsvLoad<S>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Schema(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> =
        reader.headers().map_err(csv_error)?.iter().map(normalize).collect();
    let column_index = map_headers(schema, &headers, true)?;
    let target_index = column_index[schema.feature_count()]
        .expect("target index present when require_target is set");

    read_rows(reader, schema, &column_index, Some(target_index))
}

/// Like `load_csv` but the target column may be absent, for scoring new data.
/// Labels default to 0 when the file has no target column.
pub fn load_csv_features<S: Scalar>(path: &Path, schema: &FeatureSchema) -> Result<CsvLoad<S>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Schema(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> =
        reader.headers().map_err(csv_error)?.iter().map(normalize).collect();
    let column_index = map_headers(schema, &headers, false)?;
    let target_index = column_index[schema.feature_count()];

    read_rows(reader, schema, &column_index, target_index)
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::Row { line: pos.line() as usize, message: e.to_string() },
        None => Error::Schema(e.to_string()),
    }
}

/// Map every schema column (features, then target) to its CSV position.
fn map_headers(
    schema: &FeatureSchema,
    headers: &[String],
    require_target: bool,
) -> Result<Vec<Option<usize>>> {
    let wanted: Vec<(String, bool)> = schema
        .columns
        .iter()
        .map(|c| (normalize(&c.name), true))
        .chain([(normalize(&schema.target_name), require_target)])
        .collect();
    let mut mapping = vec![None; wanted.len()];
    let mut extra = Vec::new();
    for (pos, header) in headers.iter().enumerate() {
        match wanted.iter().position(|(name, _)| name == header) {
            Some(i) if mapping[i].is_none() => mapping[i] = Some(pos),
            Some(_) => {
                return Err(Error::Schema(format!("duplicate column \"{header}\" in header")))
            }
            None => extra.push(header.clone()),
        }
    }
    let missing: Vec<&str> = wanted
        .iter()
        .zip(&mapping)
        .filter(|((_, required), m)| *required && m.is_none())
        .map(|((name, _), _)| name.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!("missing columns: {}", missing.join(", "))));
    }
    if !extra.is_empty() {
        return Err(Error::Schema(format!("unexpected columns: {}", extra.join(", "))));
    }
    Ok(mapping)
}

fn read_rows<S: Scalar, R: std::io::Read>(
    mut reader: csv::Reader<R>,
    schema: &FeatureSchema,
    column_index: &[Option<usize>],
    target_index: Option<usize>,
) -> Result<CsvLoad<S>> {
    let mut rows: Vec<Vec<S>> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut row_ids: Vec<usize> = Vec::new();
    let mut missing_dropped: Vec<usize> = Vec::new();

    for (row_id, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(row_id + 2, |p| p.line() as usize);

        let mut cells: Vec<&str> = Vec::with_capacity(schema.feature_count() + 1);
        let mut has_missing = false;
        for spec_idx in 0..schema.feature_count() {
            let cell = record
                .get(column_index[spec_idx].expect("feature columns are all mapped"))
                .unwrap_or("")
                .trim();
            has_missing |= cell.is_empty();
            cells.push(cell);
        }
        let target_cell = target_index.map(|t| record.get(t).unwrap_or("").trim());
        has_missing |= target_cell == Some("");
        if has_missing {
            missing_dropped.push(row_id);
            continue;
        }

        let mut row = Vec::with_capacity(schema.feature_count());
        for (spec, cell) in schema.columns.iter().zip(&cells) {
            row.push(parse_cell::<S>(spec, cell, line)?);
        }
        let label = match target_cell {
            Some(cell) => {
                let value: f64 = cell.parse().map_err(|_| Error::Row {
                    line,
                    message: format!("cannot parse target value \"{cell}\""),
                })?;
                if value == 0.0 {
                    0
                } else if value == schema.positive_label as f64 {
                    1
                } else {
                    return Err(Error::Row {
                        line,
                        message: format!("target must be 0 or {}, got {cell}", schema.positive_label),
                    });
                }
            }
            None => 0,
        };

        rows.push(row);
        labels.push(label);
        row_ids.push(row_id);
    }

    if rows.is_empty() {
        return Err(Error::Shape("empty data section".into()));
    }
    let dataset = LabeledDataset::new(Matrix::from_rows(rows)?, labels, schema.clone(), row_ids)?;
    Ok(CsvLoad { dataset, missing_dropped, had_target: target_index.is_some() })
}

fn parse_cell<S: Scalar>(spec: &ColumnSpec, cell: &str, line: usize) -> Result<S> {
    let value: f64 = cell.parse().map_err(|_| Error::Row {
        line,
        message: format!("cannot parse \"{cell}\" in column \"{}\"", spec.name),
    })?;
    if !value.is_finite() {
        return Err(Error::Row {
            line,
            message: format!("non-finite value in column \"{}\"", spec.name),
        });
    }
    match (&spec.kind, &spec.range) {
        (ColumnKind::Numeric, Some(AllowedRange::Interval { min, max })) => {
            if value < *min || value > *max {
                return Err(Error::Row {
                    line,
                    message: format!(
                        "value {value} outside [{min}, {max}] in column \"{}\"",
                        spec.name
                    ),
                });
            }
        }
        (ColumnKind::Nominal, range) => {
            if value.fract() != 0.0 {
                return Err(Error::Row {
                    line,
                    message: format!(
                        "nominal column \"{}\" needs an integer code, got {cell}",
                        spec.name
                    ),
                });
            }
            if let Some(AllowedRange::Categories(codes)) = range {
                if !codes.contains(&(value as i64)) {
                    return Err(Error::Row {
                        line,
                        message: format!("unknown code {cell} in column \"{}\"", spec.name),
                    });
                }
            }
        }
        _ => {}
    }
    Ok(S::cast(value))
}

/// Write a dataset back out as CSV with the schema's header names.
/// Integer-valued cells are written without a decimal point, everything else
/// with the shortest exact decimal form, so values round-trip bit-exactly.
pub fn write_csv<S: Scalar>(data: &LabeledDataset<S>, path: &Path) -> Result<()> {
    let mut out = String::new();
    let names: Vec<&str> = data
        .schema
        .columns
        .iter()
        .map(|c| c.name.as_str())
        .chain([data.schema.target_name.as_str()])
        .collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for i in 0..data.n_rows() {
        for (j, &v) in data.features.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write_value(&mut out, v);
        }
        let _ = write!(out, ",{}", data.labels[i]);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_value<S: Scalar>(out: &mut String, v: S) {
    let f = v.as_f64();
    if f.fract() == 0.0 && f.abs() < 1e15 {
        let _ = write!(out, "{}", f as i64);
    } else {
        let _ = write!(out, "{f}");
    }
}

/// Per-numeric-column location/scale statistics (population stddev).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats<S> {
    pub column: usize,
    pub mean: S,
    pub stddev: S,
}

fn numeric_column_stats<S: Scalar>(data: &LabeledDataset<S>) -> Vec<ColumnStats<S>> {
    let n = S::from_count(data.n_rows());
    data.schema
        .numeric_indices()
        .into_iter()
        .map(|j| {
            let mean = data.features.column(j).sum::<S>() / n;
            let var = data
                .features
                .column(j)
                .map(|v| (v - mean) * (v - mean))
                .sum::<S>()
                / n;
            ColumnStats { column: j, mean, stddev: var.sqrt() }
        })
        .collect()
}

/// Z-score outlier filter, separated into fit and apply so the statistics
/// can come from training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZscoreFilter<S> {
    pub stats: Vec<ColumnStats<S>>,
    pub threshold: S,
}

impl<S: Scalar> ZscoreFilter<S> {
    pub fn fit(data: &LabeledDataset<S>, threshold: S) -> Result<Self> {
        if !(threshold > S::zero()) {
            return Err(Error::Parameter(format!("z threshold must be positive, got {threshold}")));
        }
        if data.n_rows() == 0 {
            return Err(Error::Shape("cannot fit a z-score filter on zero rows".into()));
        }
        Ok(Self { stats: numeric_column_stats(data), threshold })
    }

    /// Remove every row with |z| > threshold in any numeric column. Columns
    /// with zero stddev never trigger removal (their z is defined as 0).
    /// Returns the surviving dataset and the removed rows' original ids.
    pub fn apply(&self, data: &LabeledDataset<S>) -> (LabeledDataset<S>, Vec<usize>) {
        let mut keep = Vec::new();
        let mut removed = Vec::new();
        for i in 0..data.n_rows() {
            let row = data.features.row(i);
            let is_outlier = self.stats.iter().any(|s| {
                s.stddev > S::zero() && ((row[s.column] - s.mean) / s.stddev).abs() > self.threshold
            });
            if is_outlier {
                removed.push(data.row_ids[i]);
            } else {
                keep.push(i);
            }
        }
        (data.select(&keep), removed)
    }
}

/// One-shot form: statistics from the full input, filter applied to it.
/// All rows removed is not an error; callers must check.
pub fn filter_outliers_zscore<S: Scalar>(
    data: &LabeledDataset<S>,
    threshold: S,
) -> Result<(LabeledDataset<S>, Vec<usize>)> {
    let filter = ZscoreFilter::fit(data, threshold)?;
    Ok(filter.apply(data))
}

/// Z-score standardizer for numeric columns. Nominal columns pass through
/// untouched; zero-stddev columns are centered only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<S> {
    pub stats: Vec<ColumnStats<S>>,
    pub fitted: bool,
}

impl<S: Scalar> Default for Standardizer<S> {
    fn default() -> Self {
        Self { stats: Vec::new(), fitted: false }
    }
}

pub fn fit_standardizer<S: Scalar>(data: &LabeledDataset<S>) -> Result<Standardizer<S>> {
    if data.n_rows() == 0 {
        return Err(Error::Shape("cannot fit a standardizer on zero rows".into()));
    }
    Ok(Standardizer { stats: numeric_column_stats(data), fitted: true })
}

impl<S: Scalar> Standardizer<S> {
    pub fn transform(&self, data: &LabeledDataset<S>) -> Result<LabeledDataset<S>> {
        self.map(data, |v, mean, sd| if sd > S::zero() { (v - mean) / sd } else { v - mean })
    }

    /// Replay mean/stddev to recover original values.
    pub fn inverse_transform(&self, data: &LabeledDataset<S>) -> Result<LabeledDataset<S>> {
        self.map(data, |v, mean, sd| if sd > S::zero() { v * sd + mean } else { v + mean })
    }

    fn map(
        &self,
        data: &LabeledDataset<S>,
        f: impl Fn(S, S, S) -> S,
    ) -> Result<LabeledDataset<S>> {
        if !self.fitted {
            return Err(Error::Model("standardizer is not fitted".into()));
        }
        let expected = data.schema.numeric_indices();
        if self.stats.iter().map(|s| s.column).collect::<Vec<_>>() != expected {
            return Err(Error::Schema(
                "standardizer was fitted on a different schema".into(),
            ));
        }
        let mut out = data.clone();
        for s in &self.stats {
            for i in 0..out.n_rows() {
                let v = out.features.get(i, s.column);
                out.features.set(i, s.column, f(v, s.mean, s.stddev));
            }
        }
        Ok(out)
    }
}

/// Disjoint train/test row positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified shuffle split. Per class, the test share is
/// round-half-to-even(count * fraction); leftover rows go to train.
pub fn train_test_split_stratified<S: Scalar>(
    data: &LabeledDataset<S>,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let by_class = class_positions(data)?;
    for (class, positions) in by_class.iter().enumerate() {
        if positions.len() < 2 {
            return Err(Error::Shape(format!(
                "class {class} has {} rows; stratified splitting needs at least 2",
                positions.len()
            )));
        }
    }
    let mut rng = rng_from(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for positions in by_class {
        let mut positions = positions;
        shuffle(&mut rng, &mut positions);
        let n_test = (positions.len() as f64 * test_fraction).round_ties_even() as usize;
        test.extend_from_slice(&positions[..n_test]);
        train.extend_from_slice(&positions[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// k disjoint stratified folds covering all rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    /// Row positions outside fold `f`.
    pub fn complement(&self, f: usize) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.folds.iter().enumerate().filter(|(i, _)| *i != f).flat_map(|(_, v)| v.iter().copied()).collect();
        out.sort_unstable();
        out
    }
}

pub fn stratified_kfold<S: Scalar>(
    data: &LabeledDataset<S>,
    k: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Parameter(format!("k must be at least 2, got {k}")));
    }
    let by_class = class_positions(data)?;
    for (class, positions) in by_class.iter().enumerate() {
        if positions.len() < k {
            return Err(Error::Shape(format!(
                "k = {k} exceeds class {class} count ({})",
                positions.len()
            )));
        }
    }
    let mut rng = rng_from(seed);
    let mut folds = vec![Vec::new(); k];
    for positions in by_class {
        let mut positions = positions;
        shuffle(&mut rng, &mut positions);
        for (i, pos) in positions.into_iter().enumerate() {
            folds[i % k].push(pos);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldPlan { k, folds, seed })
}

fn class_positions<S: Scalar>(data: &LabeledDataset<S>) -> Result<[Vec<usize>; 2]> {
    if data.n_rows() == 0 {
        return Err(Error::Shape("no rows to partition".into()));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in data.labels.iter().enumerate() {
        by_class[y as usize].push(i);
    }
    Ok(by_class)
}
