use std::collections::VecDeque;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::objective::he_init;
use super::train::{net_objective, sgd, validate_collect_start, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{LikelihoodSpec, NetworkSpec, ParamVector};
use crate::priors::PriorSpec;
use crate::rng;

/// Default rank of the deviation matrix.
pub const DEFAULT_RANK: usize = 20;

/// Gaussian `N(μ, ½·diag(σ²) + D Dᵀ / (2(K−1)))` built from SGD iterates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwagGaussian {
    pub mean: ParamVector,
    pub diag_var: Vec<f64>,
    /// `K` deviation columns, oldest first.
    pub deviations: Vec<Vec<f64>>,
    pub rank: usize,
}

impl SwagGaussian {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `w = μ + σ⊙z₁/√2 + D z₂ / √(2(K−1))`.
    pub fn sample(&self, seed: u64) -> Result<ParamVector> {
        if self.rank < 2 {
            return Err(Error::config(format!("SWAG sampling needs rank >= 2, got {}", self.rank)));
        }
        let mut rng = rng::seeded(seed);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let low_rank = 1.0 / (2.0 * (self.rank as f64 - 1.0)).sqrt();
        let mut w: Vec<f64> = self
            .mean
            .values()
            .iter()
            .zip(&self.diag_var)
            .map(|(m, v)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                m + inv_sqrt2 * v.sqrt() * z
            })
            .collect();
        for col in &self.deviations {
            let z: f64 = StandardNormal.sample(&mut rng);
            for (wi, d) in w.iter_mut().zip(col) {
                *wi += low_rank * d * z;
            }
        }
        self.mean.with_values(w)
    }

    /// The covariance the sampler targets, as a dense matrix (tests, small dims).
    pub fn covariance(&self) -> nalgebra::DMatrix<f64> {
        let d = self.dim();
        let c = 1.0 / (2.0 * (self.rank as f64 - 1.0));
        nalgebra::DMatrix::from_fn(d, d, |i, j| {
            let low: f64 = self.deviations.iter().map(|col| col[i] * col[j]).sum();
            let diag = if i == j { 0.5 * self.diag_var[i] } else { 0.0 };
            diag + c * low
        })
    }
}

pub fn sample_swag(swag: &SwagGaussian, seed: u64) -> Result<ParamVector> {
    swag.sample(seed)
}

/// Running first and second moments plus the last `rank` deviations.
#[derive(Debug, Clone)]
pub struct SwagAccumulator {
    rank: usize,
    count: usize,
    mean: Vec<f64>,
    sq_mean: Vec<f64>,
    deviations: VecDeque<Vec<f64>>,
}

impl SwagAccumulator {
    pub fn new(rank: usize) -> Self {
        SwagAccumulator {
            rank,
            count: 0,
            mean: Vec::new(),
            sq_mean: Vec::new(),
            deviations: VecDeque::with_capacity(rank + 1),
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Folds in one iterate; its deviation is taken from the updated mean.
    pub fn update(&mut self, x: &[f64]) {
        self.count += 1;
        if self.count == 1 {
            self.mean = x.to_vec();
            self.sq_mean = x.iter().map(|v| v * v).collect();
        } else {
            let n = self.count as f64;
            for ((m, s), v) in self.mean.iter_mut().zip(self.sq_mean.iter_mut()).zip(x) {
                *m += (v - *m) / n;
                *s += (v * v - *s) / n;
            }
        }
        self.deviations.push_back(x.iter().zip(&self.mean).map(|(v, m)| v - m).collect());
        if self.deviations.len() > self.rank {
            self.deviations.pop_front();
        }
    }

    pub fn finish(&self, template: &ParamVector) -> Result<SwagGaussian> {
        if self.count < self.rank + 1 {
            return Err(Error::config(format!(
                "rank-{} SWAG needs at least {} collected iterates, got {}",
                self.rank,
                self.rank + 1,
                self.count
            )));
        }
        let diag_var = self
            .sq_mean
            .iter()
            .zip(&self.mean)
            .map(|(s, m)| (s - m * m).max(0.0))
            .collect();
        Ok(SwagGaussian {
            mean: template.with_values(self.mean.clone())?,
            diag_var,
            deviations: self.deviations.iter().cloned().collect(),
            rank: self.rank,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SwagFit {
    pub swag: SwagGaussian,
    /// Last SGD iterate of the run.
    pub final_iterate: ParamVector,
    pub loss_trace: Vec<f64>,
}

/// SGD run that collects end-of-epoch iterates from `collect_start` onward
/// into a rank-`rank` SWAG Gaussian.
pub fn fit_swag(
    spec: &NetworkSpec,
    data: &Dataset,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    config: &TrainConfig,
    collect_start: usize,
    rank: usize,
) -> Result<SwagFit> {
    validate_collect_start(config, collect_start)?;
    if config.epochs - collect_start < rank + 1 {
        return Err(Error::config(format!(
            "rank-{rank} SWAG needs {} collected epochs, schedule provides {}",
            rank + 1,
            config.epochs - collect_start
        )));
    }
    let obj = net_objective(spec, data, likelihood, prior, config)?;
    let mut acc = SwagAccumulator::new(rank);
    let (w, loss_trace) = sgd(&obj, he_init(spec, config.seed).into_values(), config, |epoch, w| {
        if epoch >= collect_start {
            acc.update(w);
        }
    })?;
    let final_iterate = obj.params(w)?;
    Ok(SwagFit {
        swag: acc.finish(&final_iterate)?,
        final_iterate,
        loss_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_iterates_collapse() {
        let x = [0.1, -3.7, 2.2];
        let mut acc = SwagAccumulator::new(2);
        for _ in 0..4 {
            acc.update(&x);
        }
        let g = acc.finish(&ParamVector::flat(vec![0.0; 3])).unwrap();
        assert_eq!(g.mean.values(), &x);
        assert!(g.diag_var.iter().all(|&v| v == 0.0));
        assert!(g.deviations.iter().flatten().all(|&d| d == 0.0));
        assert_eq!(g.sample(3).unwrap().values(), &x);
    }

    #[test]
    fn hand_stream_of_three() {
        // Iterates (1,2), (3,0), (2,4); K = 2.
        // means after each: (1,2), (2,1), (2,2)
        // second moments: (1,4) → (5,2) → (14/3, 20/3)
        // var = (14/3 − 4, 20/3 − 4) = (2/3, 8/3)
        // deviations kept (last two): (3,0)−(2,1) = (1,−1); (2,4)−(2,2) = (0,2)
        let mut acc = SwagAccumulator::new(2);
        for x in [[1.0, 2.0], [3.0, 0.0], [2.0, 4.0]] {
            acc.update(&x);
        }
        let g = acc.finish(&ParamVector::flat(vec![0.0; 2])).unwrap();
        assert_eq!(g.mean.values(), &[2.0, 2.0]);
        assert!((g.diag_var[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((g.diag_var[1] - 8.0 / 3.0).abs() < 1e-12);
        assert_eq!(g.deviations, vec![vec![1.0, -1.0], vec![0.0, 2.0]]);
    }

    #[test]
    fn too_few_iterates() {
        let mut acc = SwagAccumulator::new(3);
        acc.update(&[1.0]);
        acc.update(&[2.0]);
        acc.update(&[3.0]);
        assert!(acc.finish(&ParamVector::flat(vec![0.0])).is_err());
    }

    #[test]
    fn rank_one_cannot_sample() {
        let g = SwagGaussian {
            mean: ParamVector::flat(vec![0.0]),
            diag_var: vec![1.0],
            deviations: vec![vec![1.0]],
            rank: 1,
        };
        assert!(g.sample(0).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let g = SwagGaussian {
            mean: ParamVector::flat(vec![0.5, 1.0]),
            diag_var: vec![1.0, 0.5],
            deviations: vec![vec![1.0, 0.0], vec![-0.5, 0.3]],
            rank: 2,
        };
        assert_eq!(g.sample(4).unwrap(), g.sample(4).unwrap());
        assert_ne!(g.sample(4).unwrap(), g.sample(5).unwrap());
    }
}
