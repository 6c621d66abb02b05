//! Non-tree learners: k-nearest neighbors, linear models trained by
//! full-batch (sub)gradient descent, and a one-hidden-layer MLP. Logistic
//! regression lives here too; the stacking meta-learner reuses it.

mod knn;
mod linear;
mod mlp;

pub use knn::{fit_knn, knn_predict_proba, KnnModel};
pub use linear::{fit_linear_svc, fit_logistic_regression, LinearConfig, LinearKind, LinearModel};
pub use mlp::{fit_mlp, mlp_gradients, mlp_loss, MlpConfig, MlpGradients, MlpModel};
