//! Posterior approximations over network parameters.

mod container;
mod ensemble;
mod hmc;
mod laplace;
mod objective;
mod posterior;
mod sgld;
mod svi;
mod swag;
mod train;

pub use container::{decode, encode, read_posterior, write_posterior};
pub use ensemble::{deep_ensemble, multi_swa, multi_swag, MultiSwag, SwagRuns};
pub use hmc::{hmc_chain, run_hmc, run_hmc_objective, HmcChain, HmcConfig, HmcRun};
pub use laplace::{fisher_diagonal, laplace_log_marginal, Curvature, LaplaceEstimate, CURVATURE_FLOOR};
pub use objective::{he_init, neg_log_posterior, neg_log_prior, NetObjective, Objective, PriorOnly};
pub use posterior::PosteriorApprox;
pub use sgld::{run_sgld, sgld_chain};
pub use svi::{elbo_estimate, fit_svi, fit_svi_objective, kl_to_prior, log_joint, FactorizedGaussian, SviConfig, SviOutcome};
pub use swag::{fit_swag, sample_swag, SwagAccumulator, SwagFit, SwagGaussian, DEFAULT_RANK};
pub use train::{sgd, train_map, train_swa, RunningAverage, Schedule, SwaOutcome, TrainConfig, TrainOutcome};

pub(crate) use svi::Adam;
