use rayon::prelude::*;

use super::posterior::PosteriorApprox;
use super::swag::{fit_swag, SwagFit};
use super::train::{train_map, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{LikelihoodSpec, NetworkSpec, ParamVector};
use crate::priors::PriorSpec;
use crate::rng;

const SAMPLE_SALT: u64 = 0x5A3D;

/// `members` independent MAP runs; member `j` trains with seed `config.seed + j`.
pub fn deep_ensemble(
    spec: &NetworkSpec,
    data: &Dataset,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    config: &TrainConfig,
    members: usize,
) -> Result<PosteriorApprox> {
    if members == 0 {
        return Err(Error::config("an ensemble needs at least one member"));
    }
    let params = (0..members)
        .into_par_iter()
        .map(|j| Ok(train_map(spec, data, likelihood, prior, &config.with_seed(rng::member_seed(config.seed, j)))?.params))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorApprox::DiracEnsemble(params))
}

/// Independent SWAG runs that also serve as deep-ensemble and MultiSWA
/// members: run `j` trains with seed `config.seed + j`, and its final
/// iterate is exactly the MAP solution `train_map` returns for that seed.
#[derive(Debug, Clone)]
pub struct SwagRuns {
    pub fits: Vec<SwagFit>,
}

impl SwagRuns {
    pub fn train(
        spec: &NetworkSpec,
        data: &Dataset,
        likelihood: &LikelihoodSpec,
        prior: &PriorSpec,
        config: &TrainConfig,
        models: usize,
        collect_start: usize,
        rank: usize,
    ) -> Result<Self> {
        if models == 0 {
            return Err(Error::config("at least one SWAG model is required"));
        }
        let fits = (0..models)
            .into_par_iter()
            .map(|j| {
                let cfg = config.with_seed(rng::member_seed(config.seed, j));
                fit_swag(spec, data, likelihood, prior, &cfg, collect_start, rank)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SwagRuns { fits })
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }

    /// The first `m` runs only.
    pub fn take(&self, m: usize) -> Result<SwagRuns> {
        if m == 0 || m > self.fits.len() {
            return Err(Error::config(format!("cannot take {m} of {} runs", self.fits.len())));
        }
        Ok(SwagRuns { fits: self.fits[..m].to_vec() })
    }

    /// Final SGD iterates as a deep ensemble.
    pub fn deep_ensemble(&self) -> PosteriorApprox {
        PosteriorApprox::DiracEnsemble(self.fits.iter().map(|f| f.final_iterate.clone()).collect())
    }

    /// SWA solutions (the SWAG means).
    pub fn multi_swa(&self) -> PosteriorApprox {
        PosteriorApprox::DiracEnsemble(self.fits.iter().map(|f| f.swag.mean.clone()).collect())
    }

    pub fn mixture(&self) -> PosteriorApprox {
        PosteriorApprox::Mixture(self.fits.iter().map(|f| PosteriorApprox::Swag(f.swag.clone())).collect())
    }

    /// `samples_per` draws from every SWAG component, component-major; the
    /// draws of component `j` do not depend on how many runs exist.
    pub fn multi_swag(&self, samples_per: usize, seed: u64) -> Result<MultiSwag> {
        if samples_per == 0 {
            return Err(Error::config("samples per SWAG model must be positive"));
        }
        let mut samples = Vec::with_capacity(self.fits.len() * samples_per);
        for (j, fit) in self.fits.iter().enumerate() {
            let base = rng::substream(rng::member_seed(seed, j), SAMPLE_SALT);
            for s in 0..samples_per {
                samples.push(fit.swag.sample(rng::member_seed(base, s))?);
            }
        }
        Ok(MultiSwag {
            mixture: self.mixture(),
            samples: PosteriorApprox::DiracEnsemble(samples),
        })
    }
}

#[derive(Debug, Clone)]
pub struct MultiSwag {
    pub mixture: PosteriorApprox,
    /// The drawn models, `samples_per` per component in component order.
    pub samples: PosteriorApprox,
}

/// `models` SWAG runs combined into a uniform mixture with `samples_per`
/// draws from each.
#[allow(clippy::too_many_arguments)]
pub fn multi_swag(
    spec: &NetworkSpec,
    data: &Dataset,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    config: &TrainConfig,
    models: usize,
    samples_per: usize,
    rank: usize,
    collect_start: usize,
) -> Result<MultiSwag> {
    SwagRuns::train(spec, data, likelihood, prior, config, models, collect_start, rank)?.multi_swag(samples_per, config.seed)
}

/// Ensemble of `models` independently trained SWA solutions.
pub fn multi_swa(
    spec: &NetworkSpec,
    data: &Dataset,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    config: &TrainConfig,
    models: usize,
    collect_start: usize,
) -> Result<PosteriorApprox> {
    if models == 0 {
        return Err(Error::config("at least one SWA model is required"));
    }
    let means = (0..models)
        .into_par_iter()
        .map(|j| {
            let cfg = config.with_seed(rng::member_seed(config.seed, j));
            Ok(super::train::train_swa(spec, data, likelihood, prior, &cfg, collect_start)?.mean)
        })
        .collect::<Result<Vec<ParamVector>>>()?;
    Ok(PosteriorApprox::DiracEnsemble(means))
}
