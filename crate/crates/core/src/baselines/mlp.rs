//! One-hidden-layer perceptron, sigmoid activations throughout, trained by
//! full-batch backpropagation on mean log-loss. Weights initialize uniformly
//! in +-1/sqrt(fan_in) from the seed; biases start at zero. The loss and
//! gradient functions are public so the analytic gradients can be checked
//! against finite differences from the outside.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::rng_from;
use crate::scalar::{sigmoid, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig<S> {
    pub hidden_size: usize,
    pub epochs: usize,
    pub learning_rate: S,
    pub seed: u64,
}

impl<S: Scalar> Default for MlpConfig<S> {
    fn default() -> Self {
        Self { hidden_size: 16, epochs: 300, learning_rate: S::cast(0.1), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel<S> {
    /// H x D.
    pub hidden_weights: Matrix<S>,
    pub hidden_bias: Vec<S>,
    pub output_weights: Vec<S>,
    pub output_bias: S,
    pub config: MlpConfig<S>,
}

/// Gradients of the mean log-loss w.r.t. every parameter, same shapes as the
/// model.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients<S> {
    pub hidden_weights: Matrix<S>,
    pub hidden_bias: Vec<S>,
    pub output_weights: Vec<S>,
    pub output_bias: S,
}

impl<S: Scalar> MlpModel<S> {
    fn init(n_features: usize, config: MlpConfig<S>) -> Result<Self> {
        if config.hidden_size == 0 {
            return Err(Error::Parameter("hidden_size must be at least 1".into()));
        }
        let mut rng = rng_from(config.seed);
        let mut draw = |scale: f64| -> S {
            let u: f64 = rng.random();
            S::cast((2.0 * u - 1.0) * scale)
        };
        // draw order is fixed: hidden weights row-major, then output weights
        let hidden_scale = 1.0 / (n_features as f64).sqrt();
        let hidden = Matrix::from_rows(
            (0..config.hidden_size)
                .map(|_| (0..n_features).map(|_| draw(hidden_scale)).collect())
                .collect(),
        )?;
        let output_scale = 1.0 / (config.hidden_size as f64).sqrt();
        let output = (0..config.hidden_size).map(|_| draw(output_scale)).collect();
        Ok(Self {
            hidden_weights: hidden,
            hidden_bias: vec![S::zero(); config.hidden_size],
            output_weights: output,
            output_bias: S::zero(),
            config,
        })
    }

    fn hidden_activations(&self, row: &[S]) -> Vec<S> {
        (0..self.config.hidden_size)
            .map(|h| {
                let z = self
                    .hidden_weights
                    .row(h)
                    .iter()
                    .zip(row)
                    .map(|(&w, &x)| w * x)
                    .sum::<S>()
                    + self.hidden_bias[h];
                sigmoid(z)
            })
            .collect()
    }

    fn forward(&self, row: &[S]) -> (Vec<S>, S) {
        let a = self.hidden_activations(row);
        let z = self.output_weights.iter().zip(&a).map(|(&w, &a)| w * a).sum::<S>()
            + self.output_bias;
        (a, sigmoid(z))
    }

    pub fn predict_proba(&self, rows: &Matrix<S>) -> Result<Vec<[S; 2]>> {
        if rows.n_cols() != self.hidden_weights.n_cols() {
            return Err(Error::Model(format!(
                "rows have {} features, model has {}",
                rows.n_cols(),
                self.hidden_weights.n_cols()
            )));
        }
        Ok(rows
            .rows_iter()
            .map(|row| {
                let (_, p) = self.forward(row);
                [S::one() - p, p]
            })
            .collect())
    }
}

/// Mean log-loss of the network on a labeled batch. Sigmoid outputs are
/// strictly inside (0,1) so no clipping is applied; this keeps the function
/// smooth for gradient checking.
pub fn mlp_loss<S: Scalar>(model: &MlpModel<S>, features: &Matrix<S>, labels: &[u8]) -> S {
    let n = S::from_count(features.n_rows());
    features
        .rows_iter()
        .zip(labels)
        .map(|(row, &y)| {
            let (_, p) = model.forward(row);
            if y == 1 {
                -p.ln()
            } else {
                -(S::one() - p).ln()
            }
        })
        .sum::<S>()
        / n
}

/// Analytic gradients by backpropagation.
pub fn mlp_gradients<S: Scalar>(
    model: &MlpModel<S>,
    features: &Matrix<S>,
    labels: &[u8],
) -> MlpGradients<S> {
    let h = model.config.hidden_size;
    let d = model.hidden_weights.n_cols();
    let n = S::from_count(features.n_rows());
    let mut grad = MlpGradients {
        hidden_weights: Matrix::zeros(h, d),
        hidden_bias: vec![S::zero(); h],
        output_weights: vec![S::zero(); h],
        output_bias: S::zero(),
    };
    for (row, &y) in features.rows_iter().zip(labels) {
        let (a, p) = model.forward(row);
        let delta_out = (p - S::from_count(y as usize)) / n;
        grad.output_bias = grad.output_bias + delta_out;
        for i in 0..h {
            grad.output_weights[i] = grad.output_weights[i] + delta_out * a[i];
            let delta_h = delta_out * model.output_weights[i] * a[i] * (S::one() - a[i]);
            grad.hidden_bias[i] = grad.hidden_bias[i] + delta_h;
            for (j, &x) in row.iter().enumerate() {
                let g = grad.hidden_weights.get(i, j);
                grad.hidden_weights.set(i, j, g + delta_h * x);
            }
        }
    }
    grad
}

pub fn fit_mlp<S: Scalar>(
    features: &Matrix<S>,
    labels: &[u8],
    config: MlpConfig<S>,
) -> Result<MlpModel<S>> {
    if features.n_rows() != labels.len() {
        return Err(Error::Shape("features and labels must have equal length".into()));
    }
    if features.n_rows() == 0 {
        return Err(Error::Shape("cannot fit on zero rows".into()));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::SingleClass("MLP fits need both classes present".into()));
    }
    let mut model = MlpModel::init(features.n_cols(), config)?;
    let lr = config.learning_rate;
    for _ in 0..config.epochs {
        let grad = mlp_gradients(&model, features, labels);
        for i in 0..config.hidden_size {
            for j in 0..features.n_cols() {
                let w = model.hidden_weights.get(i, j);
                model.hidden_weights.set(i, j, w - lr * grad.hidden_weights.get(i, j));
            }
            model.hidden_bias[i] = model.hidden_bias[i] - lr * grad.hidden_bias[i];
            model.output_weights[i] = model.output_weights[i] - lr * grad.output_weights[i];
        }
        model.output_bias = model.output_bias - lr * grad.output_bias;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (Matrix<f64>, Vec<u8>) {
        let x = Matrix::from_rows(vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        (x, vec![0, 1, 1, 0])
    }

    #[test]
    fn xor_is_learned() {
        let (x, y) = xor();
        let config = MlpConfig { hidden_size: 4, epochs: 5000, learning_rate: 0.5, seed: 0 };
        let model = fit_mlp(&x, &y, config).unwrap();
        let p = model.predict_proba(&x).unwrap();
        for (p, &y) in p.iter().zip(&y) {
            assert_eq!(u8::from(p[1] >= 0.5), y, "probabilities: {p:?}");
        }
    }

    #[test]
    fn zero_epochs_outputs_are_reproducible_and_interior() {
        let (x, _) = xor();
        let config = MlpConfig { hidden_size: 3, epochs: 0, learning_rate: 0.5, seed: 7 };
        let a = fit_mlp(&x, &[0, 1, 1, 0], config).unwrap();
        let b = fit_mlp(&x, &[0, 1, 1, 0], config).unwrap();
        assert_eq!(a, b);
        for p in a.predict_proba(&x).unwrap() {
            assert!(p[1] > 0.0 && p[1] < 1.0);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn different_seeds_differ() {
        let (x, y) = xor();
        let a = fit_mlp(&x, &y, MlpConfig { seed: 0, epochs: 0, ..MlpConfig::default() }).unwrap();
        let b = fit_mlp(&x, &y, MlpConfig { seed: 1, epochs: 0, ..MlpConfig::default() }).unwrap();
        assert_ne!(a.hidden_weights, b.hidden_weights);
    }

    #[test]
    fn init_is_bounded_by_fan_in() {
        let (x, y) = xor();
        let config = MlpConfig { hidden_size: 8, epochs: 0, learning_rate: 0.1, seed: 3 };
        let model = fit_mlp(&x, &y, config).unwrap();
        let hidden_bound = 1.0 / (2.0f64).sqrt();
        for i in 0..8 {
            for j in 0..2 {
                assert!(model.hidden_weights.get(i, j).abs() <= hidden_bound);
            }
            assert!(model.output_weights[i].abs() <= 1.0 / (8.0f64).sqrt());
            assert_eq!(model.hidden_bias[i], 0.0);
        }
        assert_eq!(model.output_bias, 0.0);
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = xor();
        assert!(fit_mlp(&x, &[1, 1, 1, 1], MlpConfig::default()).is_err());
    }

    #[test]
    fn hidden_size_zero_rejected() {
        let (x, y) = xor();
        let config = MlpConfig { hidden_size: 0, ..MlpConfig::default() };
        assert!(fit_mlp(&x, &y, config).is_err());
    }
}
