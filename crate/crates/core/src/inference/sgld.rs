use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::objective::{he_init, neg_log_posterior, Objective};
use super::train::{net_objective, Batcher, Schedule, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{LikelihoodSpec, NetworkSpec, ParamVector};
use crate::priors::PriorSpec;
use crate::rng;

/// Langevin updates `w ← w − (η_t/2)∇L + √η_t ξ` on minibatch gradients.
/// `step_size(t)` gives `η_t` for global step `t`; `on_step` sees every iterate.
pub fn sgld_chain<O: Objective + ?Sized>(
    obj: &O,
    init: Vec<f64>,
    steps: usize,
    batch_size: usize,
    step_size: impl Fn(usize) -> f64,
    seed: u64,
    mut on_step: impl FnMut(usize, &[f64]),
) -> Result<Vec<f64>> {
    if init.len() != obj.dim() {
        return Err(Error::dim("SGLD initial state", obj.dim(), init.len()));
    }
    let mut rng = rng::seeded(seed);
    let mut batcher = Batcher::new(obj.n_data(), batch_size);
    let per_epoch = batcher.steps();
    let free: Vec<bool> = obj.prior_stds().iter().map(|&s| s > 0.0).collect();
    let mut w = init;
    let mut grad = vec![0.0; w.len()];
    for t in 0..steps {
        let within = t % per_epoch;
        if within == 0 && !batcher.full() {
            batcher.shuffle(&mut rng);
        }
        let rows = if obj.n_data() == 0 { None } else { Some(batcher.rows(within)) };
        neg_log_posterior(obj, &w, rows, &mut grad).map_err(|e| Error::numerical(format!("SGLD diverged at step {t}: {e}")))?;
        let eta = step_size(t);
        let noise = eta.sqrt();
        for i in 0..w.len() {
            if free[i] {
                let xi: f64 = StandardNormal.sample(&mut rng);
                w[i] += -0.5 * eta * grad[i] + noise * xi;
            }
        }
        on_step(t, &w);
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("SGLD iterate is not finite"));
    }
    Ok(w)
}

/// `n_samples` independent SGLD runs, each restarted from a fresh He
/// initialization under a cosine schedule; only the last iterate of each run is kept.
pub fn run_sgld(
    spec: &NetworkSpec,
    data: &Dataset,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    config: &TrainConfig,
    n_samples: usize,
) -> Result<Vec<ParamVector>> {
    config.validate()?;
    if config.schedule != Schedule::Cosine {
        return Err(Error::config("SGLD requires the cosine schedule"));
    }
    if n_samples == 0 {
        return Err(Error::config("SGLD needs at least one sample"));
    }
    let obj = net_objective(spec, data, likelihood, prior, config)?;
    let steps_per_epoch = Batcher::new(obj.n_data(), config.batch_size).steps();
    let total = config.epochs * steps_per_epoch;
    (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let seed = rng::member_seed(config.seed, s);
            let lr = |t: usize| config.lr * config.schedule.factor(t as f64 / total as f64);
            let w = sgld_chain(&obj, he_init(spec, seed).into_values(), total, config.batch_size, lr, seed, |_, _| {})?;
            obj.params(w)
        })
        .collect()
}
