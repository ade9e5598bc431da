use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::objective::{neg_log_prior, Objective};
use super::train::{net_objective, Batcher, Schedule, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{LikelihoodSpec, NetworkSpec, ParamVector};
use crate::priors::PriorSpec;
use crate::rng;

/// Mean-field Gaussian `q(w) = Π N(μ_i, σ_i²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizedGaussian {
    pub mean: ParamVector,
    /// `−∞` marks a coordinate fixed at its mean.
    pub log_std: Vec<f64>,
}

impl FactorizedGaussian {
    pub fn new(mean: ParamVector, log_std: Vec<f64>) -> Result<Self> {
        if log_std.len() != mean.len() {
            return Err(Error::dim("log standard deviations", mean.len(), log_std.len()));
        }
        if mean.values().iter().any(|v| !v.is_finite()) || log_std.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::numerical("non-finite variational parameters"));
        }
        Ok(FactorizedGaussian { mean, log_std })
    }

    /// The prior itself; clamped coordinates get `σ = 0`.
    pub fn from_prior(template: &ParamVector, prior_stds: &[f64]) -> Self {
        FactorizedGaussian {
            mean: template.with_values(vec![0.0; template.len()]).expect("same layout"),
            log_std: prior_stds.iter().map(|s| s.ln()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn std(&self) -> Vec<f64> {
        self.log_std.iter().map(|l| l.exp()).collect()
    }

    pub fn sample(&self, seed: u64) -> ParamVector {
        let mut rng = rng::seeded(seed);
        let values = self
            .mean
            .values()
            .iter()
            .zip(&self.log_std)
            .map(|(m, l)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                m + l.exp() * z
            })
            .collect();
        self.mean.with_values(values).expect("same layout")
    }
}

/// `KL(q ‖ N(0, diag(s²)))`; coordinates with `s = 0` are skipped.
pub fn kl_to_prior(q: &FactorizedGaussian, prior_stds: &[f64]) -> f64 {
    q.mean
        .values()
        .iter()
        .zip(&q.log_std)
        .zip(prior_stds)
        .filter(|(_, &s)| s > 0.0)
        .map(|((m, l), s)| {
            let v = (2.0 * l).exp();
            s.ln() - l + (v + m * m) / (2.0 * s * s) - 0.5
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SviConfig {
    pub steps: usize,
    pub lr: f64,
    pub mc_samples: usize,
    /// Minibatch size; the whole data set when it is at least `n`.
    pub batch_size: usize,
    pub schedule: Schedule,
    /// Initial `log σ` for every free coordinate.
    pub init_log_std: f64,
    pub seed: u64,
}

impl Default for SviConfig {
    fn default() -> Self {
        SviConfig {
            steps: 2000,
            lr: 0.01,
            mc_samples: 1,
            batch_size: 64,
            schedule: Schedule::Cosine,
            init_log_std: -5.0,
            seed: 0,
        }
    }
}

impl SviConfig {
    fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.mc_samples == 0 || self.batch_size == 0 {
            return Err(Error::config("SVI steps, samples and batch size must be positive"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config("SVI learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SviOutcome {
    pub q: FactorizedGaussian,
    /// Single-step stochastic ELBO estimates.
    pub elbo_trace: Vec<f64>,
}

pub(crate) struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;

    pub(crate) fn new(dim: usize) -> Self {
        Adam { m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }

    /// Descent step on `x` along gradient `g`.
    pub(crate) fn step(&mut self, x: &mut [f64], g: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..x.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g[i] * g[i];
            x[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}

/// Maximizes `E_q[log p(D|w)] − KL(q‖p)` with reparameterized minibatch
/// gradients and Adam, starting from `init` (mean, log σ).
pub fn fit_svi_objective<O: Objective + ?Sized>(
    obj: &O,
    init_mean: &ParamVector,
    config: &SviConfig,
) -> Result<SviOutcome> {
    config.validate()?;
    let d = obj.dim();
    if init_mean.len() != d {
        return Err(Error::dim("SVI initial mean", d, init_mean.len()));
    }
    let stds = obj.prior_stds().to_vec();
    let free: Vec<bool> = stds.iter().map(|&s| s > 0.0).collect();
    let mut mu: Vec<f64> = init_mean.values().iter().zip(&free).map(|(&m, &f)| if f { m } else { 0.0 }).collect();
    let mut rho = vec![config.init_log_std; d];

    let mut rng = rng::seeded(config.seed);
    let mut batcher = Batcher::new(obj.n_data(), config.batch_size);
    let steps_per_epoch = batcher.steps();
    let mut adam_mu = Adam::new(d);
    let mut adam_rho = Adam::new(d);
    let mut w = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut g_mu = vec![0.0; d];
    let mut g_rho = vec![0.0; d];
    let mut trace = Vec::with_capacity(config.steps);
    let mc = config.mc_samples as f64;

    for step in 0..config.steps {
        let within = step % steps_per_epoch;
        if within == 0 && !batcher.full() {
            batcher.shuffle(&mut rng);
        }
        let rows = batcher.rows(within);
        let scale = if obj.n_data() == 0 { 0.0 } else { obj.n_data() as f64 / rows.len() as f64 };
        g_mu.iter_mut().for_each(|v| *v = 0.0);
        g_rho.iter_mut().for_each(|v| *v = 0.0);
        let mut expected_nll = 0.0;
        for _ in 0..config.mc_samples {
            for i in 0..d {
                z[i] = if free[i] { StandardNormal.sample(&mut rng) } else { 0.0 };
                w[i] = mu[i] + rho[i].exp() * z[i];
            }
            g.iter_mut().for_each(|v| *v = 0.0);
            if obj.n_data() > 0 {
                expected_nll += obj.data_term(&w, Some(rows), scale, &mut g)? / mc;
            }
            for i in 0..d {
                g_mu[i] += g[i] / mc;
                g_rho[i] += g[i] * z[i] * rho[i].exp() / mc;
            }
        }
        let mut kl = 0.0;
        for i in 0..d {
            if !free[i] {
                g_mu[i] = 0.0;
                g_rho[i] = 0.0;
                continue;
            }
            let s2 = stds[i] * stds[i];
            let v = (2.0 * rho[i]).exp();
            kl += stds[i].ln() - rho[i] + (v + mu[i] * mu[i]) / (2.0 * s2) - 0.5;
            g_mu[i] += mu[i] / s2;
            g_rho[i] += v / s2 - 1.0;
        }
        let elbo = -expected_nll - kl;
        if !elbo.is_finite() || g_mu.iter().chain(&g_rho).any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("ELBO diverged at step {step}")));
        }
        trace.push(elbo);
        let lr = config.lr * config.schedule.factor(step as f64 / config.steps as f64);
        adam_mu.step(&mut mu, &g_mu, lr);
        adam_rho.step(&mut rho, &g_rho, lr);
    }
    for i in 0..d {
        if !free[i] {
            rho[i] = f64::NEG_INFINITY;
        }
    }
    let q = FactorizedGaussian {
        mean: init_mean.with_values(mu)?,
        log_std: rho,
    };
    Ok(SviOutcome { q, elbo_trace: trace })
}

/// Monte Carlo ELBO over the full data set.
pub fn elbo_estimate<O: Objective + ?Sized>(obj: &O, q: &FactorizedGaussian, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::config("ELBO estimate needs at least one sample"));
    }
    let mut scratch = vec![0.0; obj.dim()];
    let mut total = 0.0;
    for s in 0..samples {
        let w = q.sample(rng::member_seed(seed, s));
        if obj.n_data() > 0 {
            total += obj.data_term(w.values(), None, 1.0, &mut scratch)?;
        }
    }
    Ok(-total / samples as f64 - kl_to_prior(q, obj.prior_stds()))
}

/// Unnormalized log joint `log p(D|w) + log p(w)` at `w` (tempered as the objective is).
pub fn log_joint<O: Objective + ?Sized>(obj: &O, w: &[f64]) -> Result<f64> {
    let mut scratch = vec![0.0; obj.dim()];
    let data = if obj.n_data() > 0 { obj.data_term(w, None, 1.0, &mut scratch)? } else { 0.0 };
    Ok(-data - neg_log_prior(obj, w, &mut scratch)?)
}

/// Factorized-Gaussian variational inference for a network, initialized at
/// `init` (typically an SGD solution).
pub fn fit_svi(
    spec: &NetworkSpec,
    data: &Dataset,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    train: &TrainConfig,
    init: &ParamVector,
    config: &SviConfig,
) -> Result<SviOutcome> {
    init.check(spec)?;
    let obj = net_objective(spec, data, likelihood, prior, train)?;
    fit_svi_objective(&obj, init, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::PriorOnly;

    #[test]
    fn kl_zero_at_prior() {
        let stds = [0.5, 1.0, 2.0];
        let q = FactorizedGaussian::from_prior(&ParamVector::flat(vec![3.0; 3]), &stds);
        assert!(kl_to_prior(&q, &stds).abs() < 1e-15);
    }

    #[test]
    fn kl_matches_closed_form() {
        let q = FactorizedGaussian::new(ParamVector::flat(vec![1.0]), vec![0.5f64.ln()]).unwrap();
        // ln(2/0.5) + (0.25 + 1)/8 − ½
        let expected = 4f64.ln() + 1.25 / 8.0 - 0.5;
        assert!((kl_to_prior(&q, &[2.0]) - expected).abs() < 1e-14);
    }

    #[test]
    fn prior_only_target_recovers_prior() {
        let obj = PriorOnly::new(vec![0.5, 2.0]);
        let config = SviConfig {
            steps: 3000,
            lr: 0.05,
            init_log_std: 0.0,
            ..Default::default()
        };
        let out = fit_svi_objective(&obj, &ParamVector::flat(vec![1.0, -1.0]), &config).unwrap();
        for (i, s) in [0.5f64, 2.0].iter().enumerate() {
            assert!(out.q.mean.values()[i].abs() < 1e-3);
            assert!((out.q.log_std[i] - s.ln()).abs() < 1e-3);
        }
    }
}
