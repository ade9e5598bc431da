use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{neg_log_posterior, Objective};
use super::train::{net_objective, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{LikelihoodSpec, NetworkSpec, ParamVector};
use crate::priors::PriorSpec;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmcConfig {
    pub burn_in: usize,
    pub n_samples: usize,
    pub step_size: f64,
    pub leapfrog_steps: usize,
    /// Dual-averaging step-size adaptation during burn-in.
    pub adapt: bool,
    pub target_accept: f64,
    /// Each trajectory uses `step · (1 + jitter·u)`, `u ~ U(−1, 1)`.
    pub jitter: f64,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        HmcConfig {
            burn_in: 200,
            n_samples: 200,
            step_size: 1e-3,
            leapfrog_steps: 50,
            adapt: true,
            target_accept: 0.7,
            jitter: 0.1,
            thin: 1,
            seed: 0,
        }
    }
}

impl HmcConfig {
    fn validate(&self) -> Result<()> {
        if self.leapfrog_steps == 0 {
            return Err(Error::config("leapfrog_steps must be at least 1"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::config("HMC step size must be positive"));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(Error::config("step jitter must lie in [0, 1)"));
        }
        if self.thin == 0 || self.n_samples == 0 {
            return Err(Error::config("HMC needs n_samples >= 1 and thin >= 1"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::config("target acceptance must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HmcChain {
    pub samples: Vec<Vec<f64>>,
    pub burn_in_acceptance: f64,
    pub acceptance: f64,
    /// Step size used after warmup.
    pub step_size: f64,
    /// `|ΔH|` of every post-burn-in trajectory.
    pub energy_errors: Vec<f64>,
}

/// Hoffman–Gelman dual averaging of `log ε`.
struct DualAveraging {
    mu: f64,
    h_bar: f64,
    log_eps_bar: f64,
    t: f64,
    target: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps0: f64, target: f64) -> Self {
        DualAveraging {
            mu: (10.0 * eps0).ln(),
            h_bar: 0.0,
            log_eps_bar: eps0.ln(),
            t: 0.0,
            target,
        }
    }

    fn update(&mut self, accept_prob: f64) -> f64 {
        self.t += 1.0;
        let eta = 1.0 / (self.t + Self::T0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept_prob);
        let log_eps = self.mu - self.t.sqrt() / Self::GAMMA * self.h_bar;
        let w = self.t.powf(-Self::KAPPA);
        self.log_eps_bar = w * log_eps + (1.0 - w) * self.log_eps_bar;
        log_eps.exp()
    }

    fn final_step(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

struct State {
    w: Vec<f64>,
    u: f64,
    grad: Vec<f64>,
}

fn energy<O: Objective + ?Sized>(obj: &O, w: Vec<f64>) -> Result<State> {
    let mut grad = vec![0.0; w.len()];
    let u = neg_log_posterior(obj, &w, None, &mut grad)?;
    Ok(State { w, u, grad })
}

/// One leapfrog trajectory; returns the proposal and `H(proposal) − H(start)`,
/// or `None` if the trajectory left the finite region.
fn trajectory<O: Objective + ?Sized>(obj: &O, start: &State, p0: &[f64], eps: f64, steps: usize) -> Option<(State, f64)> {
    let mut w = start.w.clone();
    let mut p = p0.to_vec();
    let mut grad = start.grad.clone();
    let mut u = start.u;
    for (pi, g) in p.iter_mut().zip(&grad) {
        *pi -= 0.5 * eps * g;
    }
    for l in 0..steps {
        for (wi, pi) in w.iter_mut().zip(&p) {
            *wi += eps * pi;
        }
        u = neg_log_posterior(obj, &w, None, &mut grad).ok()?;
        let half = if l + 1 == steps { 0.5 } else { 1.0 };
        for (pi, g) in p.iter_mut().zip(&grad) {
            *pi -= half * eps * g;
        }
    }
    let k0: f64 = 0.5 * p0.iter().map(|v| v * v).sum::<f64>();
    let k1: f64 = 0.5 * p.iter().map(|v| v * v).sum::<f64>();
    let dh = (u + k1) - (start.u + k0);
    dh.is_finite().then_some((State { w, u, grad }, dh))
}

/// A single HMC chain with unit mass matrix.
pub fn hmc_chain<O: Objective + ?Sized>(obj: &O, init: Vec<f64>, config: &HmcConfig, seed: u64) -> Result<HmcChain> {
    config.validate()?;
    if init.len() != obj.dim() {
        return Err(Error::dim("HMC initial state", obj.dim(), init.len()));
    }
    let mut rng = rng::seeded(seed);
    let mut state = energy(obj, init)?;
    let mut eps = config.step_size;
    let mut adapt = DualAveraging::new(eps, config.target_accept);
    let mut p0 = vec![0.0; obj.dim()];
    let mut burn_accepts = 0.0;
    let mut accepts = 0.0;
    let mut samples = Vec::with_capacity(config.n_samples);
    let mut energy_errors = Vec::with_capacity(config.n_samples);
    let total = config.burn_in + config.n_samples * config.thin;
    for it in 0..total {
        let warm = it < config.burn_in;
        if it == config.burn_in && config.adapt && config.burn_in > 0 {
            eps = adapt.final_step();
        }
        p0.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
        let step = eps * (1.0 + config.jitter * rng.random_range(-1.0..=1.0));
        let proposal = trajectory(obj, &state, &p0, step, config.leapfrog_steps);
        let accept_prob = match &proposal {
            Some((_, dh)) => (-dh).exp().min(1.0),
            None => 0.0,
        };
        let u: f64 = rng.random();
        let accepted = u < accept_prob;
        if let Some((next, dh)) = proposal {
            if !warm {
                energy_errors.push(dh.abs());
            }
            if accepted {
                state = next;
            }
        } else if !warm {
            energy_errors.push(f64::INFINITY);
        }
        if warm {
            burn_accepts += accept_prob;
            if config.adapt {
                eps = adapt.update(accept_prob);
            }
        } else {
            accepts += accept_prob;
            if (it - config.burn_in + 1) % config.thin == 0 {
                samples.push(state.w.clone());
            }
        }
    }
    let burn_in_acceptance = if config.burn_in > 0 { burn_accepts / config.burn_in as f64 } else { f64::NAN };
    if config.burn_in > 0 && burn_in_acceptance < 0.01 {
        return Err(Error::numerical(format!(
            "HMC acceptance {burn_in_acceptance:.4} during burn-in is below 1%; reduce the step size"
        )));
    }
    Ok(HmcChain {
        samples,
        burn_in_acceptance,
        acceptance: accepts / (config.n_samples * config.thin) as f64,
        step_size: eps,
        energy_errors,
    })
}

/// Independent chains in parallel; chain `c` uses seed `seed + c`.
pub fn run_hmc_objective<O: Objective + ?Sized>(obj: &O, inits: Vec<Vec<f64>>, config: &HmcConfig) -> Result<Vec<HmcChain>> {
    if inits.is_empty() {
        return Err(Error::config("HMC needs at least one chain"));
    }
    inits
        .into_par_iter()
        .enumerate()
        .map(|(c, init)| hmc_chain(obj, init, config, rng::member_seed(config.seed, c)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct HmcRun {
    /// All post-burn-in samples, chain-major.
    pub samples: Vec<ParamVector>,
    pub chains: Vec<HmcChain>,
}

impl HmcRun {
    pub fn mean_acceptance(&self) -> f64 {
        self.chains.iter().map(|c| c.acceptance).sum::<f64>() / self.chains.len() as f64
    }
}

/// HMC over a network posterior with one chain per initial point
/// (typically SGD solutions). The tempered objective uses `train.temperature`.
pub fn run_hmc(
    spec: &NetworkSpec,
    data: &Dataset,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    train: &TrainConfig,
    init_per_chain: &[ParamVector],
    config: &HmcConfig,
) -> Result<HmcRun> {
    let obj = net_objective(spec, data, likelihood, prior, train)?;
    for init in init_per_chain {
        init.check(spec)?;
    }
    let chains = run_hmc_objective(&obj, init_per_chain.iter().map(|p| p.values().to_vec()).collect(), config)?;
    let samples = chains
        .iter()
        .flat_map(|c| c.samples.iter().map(|w| obj.params(w.clone())))
        .collect::<Result<_>>()?;
    Ok(HmcRun { samples, chains })
}
