//! Desk-scale Bayesian deep learning.
//!
//! The crate approximates the Bayesian model average
//! `p(y|x,D) = ∫ p(y|x,w) p(w|D) dw` for small dense ReLU networks with a
//! range of posterior approximations, and ships the diagnostics needed to
//! study neural-network priors and tempered posteriors:
//!
//! - [`nn`]: dense network engine with reverse-mode gradients of tempered
//!   negative log posteriors.
//! - [`priors`]: Gaussian weight priors, prior sampling, output-scaling
//!   checks and induced function-space correlations.
//! - [`inference`]: SGD/MAP, SWA, SWAG, deep ensembles, MultiSWA, MultiSWAG,
//!   mean-field variational inference, HMC, SGLD and the diagonal Laplace
//!   evidence.
//! - [`metrics`]: Monte Carlo predictive distributions, NLL, accuracy, ECE
//!   and one-dimensional Wasserstein distances.
//! - [`gp`]: RBF Gaussian processes for regression and variational binary
//!   classification.
//! - [`data`]: toy generators, IDX ingestion, label corruption and image
//!   perturbations.
//! - [`experiments`]: the reproducible experiment harness behind the
//!   `bma-forge` binary.

pub mod data;
pub mod error;
pub mod experiments;
pub mod gp;
pub mod inference;
pub mod metrics;
pub mod nn;
pub mod priors;
pub mod rng;

pub use error::{Error, Result};
