//! Toy regression: HMC reference against deep ensembles, SVI and MultiSWAG.

use rayon::prelude::*;

use super::config::Config;
use super::settings::{hmc_config, svi_config, train_config};
use crate::data::{ToyRegression, ToyRegressionConfig};
use crate::error::Result;
use crate::inference::{fit_svi, run_hmc, train_map, HmcConfig, PosteriorApprox, Schedule, SviConfig, SwagRuns, TrainConfig};
use crate::metrics::{wasserstein1_predictive, PredictiveSamples, W1Report};
use crate::nn::{LikelihoodSpec, ParamVector};
use crate::priors::PriorSpec;
use crate::rng;

#[derive(Debug, Clone)]
pub struct ToyBmaSettings {
    pub data: ToyRegressionConfig,
    pub noise_var: f64,
    pub prior_std: f64,
    pub train: TrainConfig,
    pub hmc: HmcConfig,
    pub hmc_chains: usize,
    pub ensemble_sizes: Vec<usize>,
    pub svi: SviConfig,
    pub svi_samples: Vec<usize>,
    pub swag_rank: usize,
    pub swag_collect_start: usize,
    pub samples_per_model: usize,
    pub multiswag_models: Vec<usize>,
}

impl Default for ToyBmaSettings {
    fn default() -> Self {
        ToyBmaSettings {
            data: ToyRegressionConfig::default(),
            noise_var: 0.02 * 0.02,
            prior_std: 10.0,
            train: TrainConfig {
                epochs: 10_000,
                batch_size: 20,
                lr: 5e-9,
                schedule: Schedule::ConstantThenDecay { final_ratio: 0.3 },
                ..Default::default()
            },
            hmc: HmcConfig {
                burn_in: 200,
                n_samples: 200,
                step_size: 1e-3,
                leapfrog_steps: 50,
                ..Default::default()
            },
            hmc_chains: 20,
            ensemble_sizes: (1..=10).collect(),
            svi: SviConfig {
                steps: 3000,
                lr: 1e-2,
                batch_size: 20,
                ..Default::default()
            },
            svi_samples: vec![1, 2, 5, 10, 20],
            swag_rank: 10,
            swag_collect_start: 5000,
            samples_per_model: 20,
            multiswag_models: vec![1, 2, 3],
        }
    }
}

impl ToyBmaSettings {
    pub fn from_config(c: &Config) -> Result<Self> {
        let d = Self::default();
        let mut data = d.data.clone();
        data.points_per_cluster = c.get_or("data", "points_per_cluster", data.points_per_cluster)?;
        data.noise_std = c.get_or("data", "noise_std", data.noise_std)?;
        data.weight_std = c.get_or("data", "weight_std", data.weight_std)?;
        data.grid_points = c.get_or("data", "grid_points", data.grid_points)?;
        let max_ensemble: usize = c.get_or("ensemble", "max_members", *d.ensemble_sizes.last().unwrap())?;
        Ok(ToyBmaSettings {
            data,
            noise_var: c.get_or("model", "noise_var", d.noise_var)?,
            prior_std: c.get_or("model", "prior_std", d.prior_std)?,
            train: train_config(c, "train", &d.train)?,
            hmc: hmc_config(c, "hmc", &d.hmc)?,
            hmc_chains: c.get_or("hmc", "chains", d.hmc_chains)?,
            ensemble_sizes: (1..=max_ensemble).collect(),
            svi: svi_config(c, "svi", &d.svi)?,
            svi_samples: c.list_or("svi", "sample_counts", d.svi_samples)?,
            swag_rank: c.get_or("swag", "rank", d.swag_rank)?,
            swag_collect_start: c.get_or("swag", "collect_start", d.swag_collect_start)?,
            samples_per_model: c.get_or("swag", "samples_per_model", d.samples_per_model)?,
            multiswag_models: c.list_or("swag", "models", d.multiswag_models)?,
        })
    }
}

/// One row of the convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct W1Point {
    pub method: &'static str,
    /// Ensemble members, posterior samples or independent models.
    pub budget: usize,
    pub w1: f64,
}

#[derive(Debug, Clone)]
pub struct ToyBmaResult {
    pub toy: ToyRegression,
    pub reference: PredictiveSamples,
    pub hmc_acceptance: f64,
    pub predictives: Vec<(&'static str, PredictiveSamples)>,
    pub curves: Vec<(&'static str, W1Report)>,
    pub table: Vec<W1Point>,
}

impl ToyBmaResult {
    pub fn w1(&self, method: &str, budget: usize) -> Option<f64> {
        self.table.iter().find(|p| p.method == method && p.budget == budget).map(|p| p.w1)
    }
}

pub fn run_toy_bma(settings: &ToyBmaSettings, seed: u64) -> Result<ToyBmaResult> {
    let toy = settings.data.generate(seed)?;
    let spec = &toy.spec;
    let lik = LikelihoodSpec::gaussian(settings.noise_var)?;
    let prior = PriorSpec::isotropic(spec, settings.prior_std)?;
    let train = settings.train.with_seed(seed);

    let max_models = settings
        .ensemble_sizes
        .iter()
        .chain(&settings.multiswag_models)
        .copied()
        .max()
        .unwrap_or(1);
    let runs = SwagRuns::train(spec, &toy.train, &lik, &prior, &train, max_models, settings.swag_collect_start, settings.swag_rank)?;

    // reference chains start from their own SGD solutions
    let hmc_seed = rng::substream(seed, 0x4A3C);
    let inits: Vec<ParamVector> = (0..settings.hmc_chains)
        .into_par_iter()
        .map(|c| Ok(train_map(spec, &toy.train, &lik, &prior, &train.with_seed(rng::member_seed(hmc_seed, c)))?.params))
        .collect::<Result<_>>()?;
    let hmc_cfg = HmcConfig {
        seed: hmc_seed,
        ..settings.hmc.clone()
    };
    let hmc = run_hmc(spec, &toy.train, &lik, &prior, &train, &inits, &hmc_cfg)?;
    let reference = PredictiveSamples::from_params(spec, &hmc.samples, &toy.grid, &lik, "hmc")?;

    let mut table = Vec::new();
    let mut predictives = Vec::new();
    let mut curves = Vec::new();

    let ensemble = match runs.deep_ensemble() {
        PosteriorApprox::DiracEnsemble(m) => m,
        _ => unreachable!(),
    };
    let de_pred = PredictiveSamples::from_params(spec, &ensemble, &toy.grid, &lik, "deep_ensemble")?;
    for &j in &settings.ensemble_sizes {
        let r = wasserstein1_predictive(&de_pred.truncated(j)?, &reference)?;
        table.push(W1Point { method: "deep_ensemble", budget: j, w1: r.mean });
    }

    let svi_init = &ensemble[0];
    let svi_cfg = SviConfig {
        seed: rng::substream(seed, 0x5F1),
        ..settings.svi.clone()
    };
    let svi = fit_svi(spec, &toy.train, &lik, &prior, &train, svi_init, &svi_cfg)?;
    let svi_post = PosteriorApprox::Factorized(svi.q);
    let max_svi = settings.svi_samples.iter().copied().max().unwrap_or(1);
    let svi_pred = PredictiveSamples::from_params(spec, &svi_post.draw(max_svi, rng::substream(seed, 0x5F2))?, &toy.grid, &lik, "svi")?;
    for &s in &settings.svi_samples {
        let r = wasserstein1_predictive(&svi_pred.truncated(s)?, &reference)?;
        table.push(W1Point { method: "svi", budget: s, w1: r.mean });
    }

    let mut multiswag_full = None;
    for &m in &settings.multiswag_models {
        let ms = runs.take(m)?.multi_swag(settings.samples_per_model, seed)?;
        let params = match ms.samples {
            PosteriorApprox::DiracEnsemble(p) => p,
            _ => unreachable!(),
        };
        let pred = PredictiveSamples::from_params(spec, &params, &toy.grid, &lik, "multiswag")?;
        let r = wasserstein1_predictive(&pred, &reference)?;
        table.push(W1Point { method: "multiswag", budget: m, w1: r.mean });
        if Some(&m) == settings.multiswag_models.iter().max() {
            curves.push(("multiswag", r));
            multiswag_full = Some(pred);
        }
    }

    curves.push(("deep_ensemble", wasserstein1_predictive(&de_pred, &reference)?));
    curves.push(("svi", wasserstein1_predictive(&svi_pred, &reference)?));
    predictives.push(("deep_ensemble", de_pred));
    predictives.push(("svi", svi_pred));
    if let Some(p) = multiswag_full {
        predictives.push(("multiswag", p));
    }
    Ok(ToyBmaResult {
        toy,
        reference,
        hmc_acceptance: hmc.mean_acceptance(),
        predictives,
        curves,
        table,
    })
}
