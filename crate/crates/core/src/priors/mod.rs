//! Gaussian weight priors and the function-space behaviour they induce.

mod correlation;
mod perturbation;
mod predictive;
mod scaling;
mod spec;

pub use correlation::{prior_function_values, prior_logit_correlation, CorrelationDiagram};
pub use perturbation::{
    calibrate_rbf_lengthscale, mean_pairwise_rbf, perturbation_correlation_decay,
    CorrelationModel, DecayCurve,
};
pub use predictive::{prior_predictive_summary, PriorPredictive};
pub use scaling::{verify_geometric_scaling, verify_output_scaling, verify_prior_rescaling, ScalingReport};
pub use spec::{log_prior_density, neg_log_prior_and_grad, sample_params, PriorSpec};
