//! Versioned model files. The format is pretty-printed JSON so a saved model
//! can be audited by eye; floats serialize in shortest exact decimal form,
//! so a loaded model predicts bit-identically to the one that was saved.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureSchema, Standardizer};
use crate::error::{Error, Result};
use crate::model::TrainedModel;
use crate::scalar::Scalar;

pub const MODEL_FILE_VERSION: u32 = 1;

/// Where a model came from: enough to notice a mismatched replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub config_hash: String,
    pub dataset_rows: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct ModelFile<S: Scalar> {
    pub format_version: u32,
    pub fingerprint: Fingerprint,
    pub schema: FeatureSchema,
    pub standardizer: Standardizer<S>,
    pub model: TrainedModel<S>,
}

pub fn save_model<S: Scalar>(file: &ModelFile<S>, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(file)
        .map_err(|e| Error::ModelFile(format!("serialization failed: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model<S: Scalar>(path: &Path) -> Result<ModelFile<S>> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::ModelFile(format!("{}: not a model file: {e}", path.display())))?;
    // check the version before attempting to decode the payload, so a
    // future format fails with the version message, not a shape error
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::ModelFile(format!("{}: missing format_version", path.display())))?;
    if found != MODEL_FILE_VERSION as u64 {
        return Err(Error::ModelFileVersion {
            found: found as u32,
            expected: MODEL_FILE_VERSION,
        });
    }
    serde_json::from_value(value)
        .map_err(|e| Error::ModelFile(format!("{}: malformed payload: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::fit_knn;
    use crate::dataset::fit_standardizer;
    use crate::dataset::LabeledDataset;
    use crate::matrix::Matrix;

    fn sample_file() -> ModelFile<f64> {
        let data = LabeledDataset::from_rows(
            vec![vec![0.12345678901234567], vec![2.0], vec![4.0e-17], vec![9.9]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let knn = fit_knn(&data.features, &data.labels, 2).unwrap();
        ModelFile {
            format_version: MODEL_FILE_VERSION,
            fingerprint: Fingerprint {
                config_hash: "abc123".into(),
                dataset_rows: 4,
                seed: 42,
            },
            schema: data.schema.clone(),
            standardizer: fit_standardizer(&data).unwrap(),
            model: TrainedModel::Knn(knn),
        }
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let file = sample_file();
        save_model(&file, &path).unwrap();
        let loaded: ModelFile<f64> = load_model(&path).unwrap();
        assert_eq!(loaded, file);

        let rows = Matrix::from_rows(vec![vec![1.1], vec![3.3]]).unwrap();
        let before = file.model.predict_proba(&rows).unwrap();
        let after = loaded.model.predict_proba(&rows).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn knn_training_matrix_survives_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let file = sample_file();
        save_model(&file, &path).unwrap();
        let loaded: ModelFile<f64> = load_model(&path).unwrap();
        match (&file.model, &loaded.model) {
            (TrainedModel::Knn(a), TrainedModel::Knn(b)) => {
                assert_eq!(a.features, b.features);
                assert_eq!(a.labels, b.labels);
            }
            _ => panic!("expected knn models"),
        }
    }

    #[test]
    fn version_bump_is_rejected_naming_both_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&sample_file(), &path).unwrap();
        let bumped = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 2");
        std::fs::write(&path, bumped).unwrap();
        let err = load_model::<f64>(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('2') && msg.contains('1'), "got: {msg}");
    }

    #[test]
    fn truncated_file_is_a_model_file_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&sample_file(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_model::<f64>(&path).unwrap_err(), Error::ModelFile(_)));
    }
}
