//! Gaussian processes with an RBF kernel: exact regression and variational
//! binary classification.

mod classify;
mod kernel;
mod regression;
mod sweep;

pub use classify::{gauss_hermite, gp_classify_binary, VariationalGpClassifier, VgpConfig, QUADRATURE_NODES};
pub use kernel::{kernel_matrix, median_pairwise_distance, RbfKernel};
pub use regression::{gp_fit, gp_log_marginal, gp_log_marginal_grad_lengthscale, gp_predict, gp_sample_prior, GpPrediction, GpRegressor};
pub use sweep::{corruption_sweep, sweep_csv, SweepRow};
