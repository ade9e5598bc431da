use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::objective::{he_init, neg_log_posterior, NetObjective, Objective};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{LikelihoodSpec, NetworkSpec, ParamVector, Temperature};
use crate::priors::PriorSpec;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    /// Constant for the first half of training, linear decay to
    /// `final_ratio × lr` by 90%, then constant.
    ConstantThenDecay { final_ratio: f64 },
    /// `lr · ½(1 + cos(π·t))` over training progress `t ∈ [0, 1]`.
    Cosine,
}

impl Schedule {
    /// Learning-rate multiplier at training progress `t ∈ [0, 1]`.
    pub fn factor(&self, t: f64) -> f64 {
        match *self {
            Schedule::ConstantThenDecay { final_ratio } => {
                if t < 0.5 {
                    1.0
                } else if t < 0.9 {
                    1.0 - (1.0 - final_ratio) * (t - 0.5) / 0.4
                } else {
                    final_ratio
                }
            }
            Schedule::Cosine => 0.5 * (1.0 + (std::f64::consts::PI * t).cos()),
        }
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::ConstantThenDecay { final_ratio: 0.01 }
    }
}

/// Optimizer hyperparameters shared by every gradient-based method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub schedule: Schedule,
    pub temperature: Temperature,
    pub seed: u64,
    /// Keep every collected end-of-epoch iterate (SWA/SWAG only).
    pub record_iterates: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 64,
            lr: 0.05,
            momentum: 0.9,
            schedule: Schedule::default(),
            temperature: Temperature::ONE,
            seed: 0,
            record_iterates: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("momentum must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        TrainConfig { seed, ..self.clone() }
    }
}

/// Shuffled minibatches for one epoch; the last batch may be short.
pub(crate) struct Batcher {
    order: Vec<usize>,
    batch: usize,
}

impl Batcher {
    pub(crate) fn new(n: usize, batch: usize) -> Self {
        Batcher {
            order: (0..n).collect(),
            batch: batch.min(n).max(1),
        }
    }

    pub(crate) fn steps(&self) -> usize {
        if self.order.is_empty() {
            1
        } else {
            self.order.len().div_ceil(self.batch)
        }
    }

    pub(crate) fn shuffle(&mut self, rng: &mut rng::Rng) {
        self.order.shuffle(rng);
    }

    pub(crate) fn rows(&self, step: usize) -> &[usize] {
        let start = step * self.batch;
        &self.order[start.min(self.order.len())..(start + self.batch).min(self.order.len())]
    }

    /// True when every step sees the whole dataset, so no shuffling is needed.
    pub(crate) fn full(&self) -> bool {
        self.batch >= self.order.len()
    }
}

/// Result of one SGD run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParamVector,
    /// Mean minibatch loss per epoch.
    pub loss_trace: Vec<f64>,
}

/// SGD with momentum on the negative log posterior of `obj`. `on_epoch` sees
/// the iterate at the end of every epoch.
pub fn sgd<O: Objective + ?Sized>(
    obj: &O,
    init: Vec<f64>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &[f64]),
) -> Result<(Vec<f64>, Vec<f64>)> {
    config.validate()?;
    if init.len() != obj.dim() {
        return Err(Error::dim("initial parameters", obj.dim(), init.len()));
    }
    let mut rng = rng::seeded(rng::substream(config.seed, BATCH_SALT));
    let mut batcher = Batcher::new(obj.n_data(), config.batch_size);
    let steps = batcher.steps();
    let total = (config.epochs * steps) as f64;
    let mut w = init;
    let mut velocity = vec![0.0; w.len()];
    let mut grad = vec![0.0; w.len()];
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if !batcher.full() {
            batcher.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for step in 0..steps {
            let rows = if obj.n_data() == 0 { None } else { Some(batcher.rows(step)) };
            let loss = neg_log_posterior(obj, &w, rows, &mut grad)
                .map_err(|e| Error::numerical(format!("training diverged at epoch {epoch}: {e}")))?;
            epoch_loss += loss;
            let lr = config.lr * config.schedule.factor((epoch * steps + step) as f64 / total);
            for ((wi, vi), gi) in w.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *vi = config.momentum * *vi + gi;
                *wi -= lr * *vi;
            }
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("parameters diverged at epoch {epoch}")));
        }
        trace.push(epoch_loss / steps as f64);
        on_epoch(epoch, &w);
    }
    Ok((w, trace))
}

const BATCH_SALT: u64 = 0xBA7C;

pub(crate) fn net_objective<'a>(
    spec: &'a NetworkSpec,
    data: &'a Dataset,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    config: &TrainConfig,
) -> Result<NetObjective<'a>> {
    NetObjective::new(spec, &data.inputs, &data.targets, *likelihood, prior, config.temperature)
}

/// MAP estimate by SGD from a seeded He initialization.
pub fn train_map(
    spec: &NetworkSpec,
    data: &Dataset,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let obj = net_objective(spec, data, likelihood, prior, config)?;
    let init = he_init(spec, config.seed).into_values();
    let (w, loss_trace) = sgd(&obj, init, config, |_, _| {})?;
    Ok(TrainOutcome {
        params: obj.params(w)?,
        loss_trace,
    })
}

/// Incremental arithmetic mean of vectors.
#[derive(Debug, Clone, Default)]
pub struct RunningAverage {
    count: usize,
    mean: Vec<f64>,
}

impl RunningAverage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, x: &[f64]) {
        self.count += 1;
        if self.count == 1 {
            self.mean = x.to_vec();
            return;
        }
        let n = self.count as f64;
        for (m, v) in self.mean.iter_mut().zip(x) {
            *m += (v - *m) / n;
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

#[derive(Debug, Clone)]
pub struct SwaOutcome {
    /// Running average of the collected end-of-epoch iterates.
    pub mean: ParamVector,
    pub final_iterate: ParamVector,
    pub loss_trace: Vec<f64>,
    /// Collected iterates, when `record_iterates` is set.
    pub iterates: Vec<ParamVector>,
}

pub(crate) fn validate_collect_start(config: &TrainConfig, collect_start: usize) -> Result<()> {
    if collect_start >= config.epochs {
        return Err(Error::config(format!(
            "collection starts at epoch {collect_start} but training has {} epochs",
            config.epochs
        )));
    }
    Ok(())
}

/// SGD that averages the iterates at the end of every epoch `≥ collect_start`.
pub fn train_swa(
    spec: &NetworkSpec,
    data: &Dataset,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    config: &TrainConfig,
    collect_start: usize,
) -> Result<SwaOutcome> {
    validate_collect_start(config, collect_start)?;
    let obj = net_objective(spec, data, likelihood, prior, config)?;
    let mut avg = RunningAverage::new();
    let mut iterates = Vec::new();
    let (w, loss_trace) = sgd(&obj, he_init(spec, config.seed).into_values(), config, |epoch, w| {
        if epoch >= collect_start {
            avg.update(w);
            if config.record_iterates {
                iterates.push(w.to_vec());
            }
        }
    })?;
    Ok(SwaOutcome {
        mean: obj.params(avg.mean().to_vec())?,
        final_iterate: obj.params(w)?,
        loss_trace,
        iterates: iterates.into_iter().map(|v| obj.params(v)).collect::<Result<_>>()?,
    })
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_shapes() {
        let s = Schedule::ConstantThenDecay { final_ratio: 0.01 };
        assert_eq!(s.factor(0.0), 1.0);
        assert_eq!(s.factor(0.49), 1.0);
        assert!((s.factor(0.7) - 0.505).abs() < 1e-12);
        assert_eq!(s.factor(0.95), 0.01);
        assert!((Schedule::Cosine.factor(0.5) - 0.5).abs() < 1e-12);
        assert!(Schedule::Cosine.factor(1.0).abs() < 1e-12);
    }

    #[test]
    fn running_average_of_opposites_is_zero() {
        let mut avg = RunningAverage::new();
        avg.update(&[1.5, -2.0, 0.25]);
        avg.update(&[-1.5, 2.0, -0.25]);
        assert_eq!(avg.mean(), &[0.0, 0.0, 0.0]);
        let mut single = RunningAverage::new();
        single.update(&[0.1, 0.2]);
        assert_eq!(single.mean(), &[0.1, 0.2]);
    }

    #[test]
    fn zero_epochs_rejected() {
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
