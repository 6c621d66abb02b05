//! k-nearest neighbors with Euclidean distance. The model is the training
//! set; prediction selects the k closest rows, ties broken by lower training
//! row index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel<S> {
    pub features: Matrix<S>,
    pub labels: Vec<u8>,
    pub k: usize,
}

pub fn fit_knn<S: Scalar>(features: &Matrix<S>, labels: &[u8], k: usize) -> Result<KnnModel<S>> {
    if features.n_rows() != labels.len() {
        return Err(Error::Shape("features and labels must have equal length".into()));
    }
    if features.n_rows() == 0 {
        return Err(Error::Shape("cannot fit k-NN on zero rows".into()));
    }
    if k == 0 || k > features.n_rows() {
        return Err(Error::Parameter(format!(
            "k must lie in 1..={}, got {k}",
            features.n_rows()
        )));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::Shape("labels must contain only 0 and 1".into()));
    }
    Ok(KnnModel { features: features.clone(), labels: labels.to_vec(), k })
}

fn squared_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

impl<S: Scalar> KnnModel<S> {
    /// P(1) = fraction of label-1 rows among the k nearest neighbors.
    pub fn predict_proba(&self, rows: &Matrix<S>) -> Result<Vec<[S; 2]>> {
        if rows.n_cols() != self.features.n_cols() {
            return Err(Error::Model(format!(
                "query rows have {} features, model stores {}",
                rows.n_cols(),
                self.features.n_cols()
            )));
        }
        let mut out = Vec::with_capacity(rows.n_rows());
        for q in 0..rows.n_rows() {
            let query = rows.row(q);
            let mut scored: Vec<(S, usize)> = (0..self.features.n_rows())
                .map(|i| (squared_distance(query, self.features.row(i)), i))
                .collect();
            let cmp = |a: &(S, usize), b: &(S, usize)| {
                a.0.partial_cmp(&b.0)
                    .expect("distances must not be NaN")
                    .then(a.1.cmp(&b.1))
            };
            if self.k < scored.len() {
                scored.select_nth_unstable_by(self.k - 1, cmp);
            }
            let positives =
                scored[..self.k].iter().filter(|&&(_, i)| self.labels[i] == 1).count();
            let p1 = S::from_count(positives) / S::from_count(self.k);
            out.push([S::one() - p1, p1]);
        }
        Ok(out)
    }
}

/// Free-function form of [`KnnModel::predict_proba`].
pub fn knn_predict_proba<S: Scalar>(
    model: &KnnModel<S>,
    rows: &Matrix<S>,
) -> Result<Vec<[S; 2]>> {
    model.predict_proba(rows)
}
