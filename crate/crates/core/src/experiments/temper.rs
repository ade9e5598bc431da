//! Posterior tempering sweep and the prior-scale adaptivity check.

use std::str::FromStr;

use rayon::prelude::*;

use super::common::{classifier_spec, dirac_members, scores, Scores};
use super::config::Config;
use super::mnist::split_by_class;
use super::settings::train_config;
use crate::data::{Dataset, ImageSet, Provenance, Split};
use crate::error::{Error, Result};
use crate::inference::{run_sgld, train_map, Schedule, SwagRuns, TrainConfig};
use crate::metrics::{softmax_row, PredictiveSamples};
use crate::nn::{forward, LikelihoodSpec, NetworkSpec, ParamVector, Temperature};
use crate::priors::{prior_predictive_summary, PriorSpec};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemperMethod {
    Map,
    Swag,
    Sgld,
}

impl TemperMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            TemperMethod::Map => "map",
            TemperMethod::Swag => "swag",
            TemperMethod::Sgld => "sgld",
        }
    }
}

impl FromStr for TemperMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "map" | "sgd" => Ok(TemperMethod::Map),
            "swag" => Ok(TemperMethod::Swag),
            "sgld" => Ok(TemperMethod::Sgld),
            other => Err(Error::config(format!("unknown tempering method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TemperSettings {
    pub classes: Vec<usize>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub downsample: usize,
    pub hidden: Vec<usize>,
    pub prior_std: f64,
    pub method: TemperMethod,
    pub temperatures: Vec<f64>,
    /// Multiply the learning rate by `min(1, T)` so cold runs stay stable.
    pub scale_lr: bool,
    pub train: TrainConfig,
    pub swag_rank: usize,
    pub collect_start: usize,
    /// SWAG draws or SGLD runs.
    pub samples: usize,
    /// Training-set sizes for the adaptivity study; empty skips it.
    pub adaptivity_sizes: Vec<usize>,
    pub adaptivity_prior_std: f64,
    pub adaptivity_samples: usize,
    pub sgld: TrainConfig,
}

impl Default for TemperSettings {
    fn default() -> Self {
        TemperSettings {
            classes: (0..10).collect(),
            train_per_class: 50,
            test_per_class: 50,
            downsample: 2,
            hidden: vec![50],
            prior_std: 1.0,
            method: TemperMethod::Swag,
            temperatures: vec![0.1, 0.5, 1.0, 2.0, 10.0],
            scale_lr: true,
            train: TrainConfig {
                epochs: 80,
                batch_size: 50,
                lr: 5e-4,
                schedule: Schedule::ConstantThenDecay { final_ratio: 1.0 },
                ..Default::default()
            },
            swag_rank: 20,
            collect_start: 40,
            samples: 20,
            adaptivity_sizes: vec![10, 100, 1000],
            adaptivity_prior_std: 10f64.sqrt(),
            adaptivity_samples: 10,
            sgld: TrainConfig {
                epochs: 30,
                batch_size: 50,
                lr: 1e-4,
                momentum: 0.0,
                schedule: Schedule::Cosine,
                ..Default::default()
            },
        }
    }
}

impl TemperSettings {
    pub fn from_config(c: &Config) -> Result<Self> {
        let d = Self::default();
        let temperatures: Vec<f64> = c.list_or("temper", "temperatures", d.temperatures)?;
        for &t in &temperatures {
            Temperature::new(t)?;
        }
        if !temperatures.contains(&1.0) {
            return Err(Error::config("temper.temperatures must include 1"));
        }
        Ok(TemperSettings {
            classes: c.list_or("data", "classes", d.classes)?,
            train_per_class: c.get_or("data", "train_per_class", d.train_per_class)?,
            test_per_class: c.get_or("data", "test_per_class", d.test_per_class)?,
            downsample: c.get_or("data", "downsample", d.downsample)?,
            hidden: c.list_or("model", "hidden", d.hidden)?,
            prior_std: c.get_or("model", "prior_std", d.prior_std)?,
            method: c.get_or("temper", "method", d.method)?,
            temperatures,
            scale_lr: c.get_or("temper", "scale_lr", d.scale_lr)?,
            train: train_config(c, "train", &d.train)?,
            swag_rank: c.get_or("swag", "rank", d.swag_rank)?,
            collect_start: c.get_or("swag", "collect_start", d.collect_start)?,
            samples: c.get_or("temper", "samples", d.samples)?,
            adaptivity_sizes: c.list_or("adaptivity", "sizes", d.adaptivity_sizes)?,
            adaptivity_prior_std: c.get_or("adaptivity", "prior_std", d.adaptivity_prior_std)?,
            adaptivity_samples: c.get_or("adaptivity", "samples", d.adaptivity_samples)?,
            sgld: train_config(c, "sgld", &d.sgld)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperRow {
    pub temperature: f64,
    pub scores: Scores,
    /// Largest parameter difference between the tempered run and the run
    /// with likelihood `p^{1/T}` at temperature 1.
    pub equivalence_max_diff: f64,
}

/// Class balance of the dataset-averaged predictive per posterior sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptivityRow {
    /// Training points; 0 stands for the prior.
    pub n: usize,
    /// Mean over samples of the largest averaged class probability.
    pub mean_max_class_prob: f64,
    pub mean_entropy: f64,
}

#[derive(Debug, Clone)]
pub struct TemperResult {
    pub method: TemperMethod,
    pub rows: Vec<TemperRow>,
    /// The T = 1 run matched an untempered baseline bit for bit.
    pub baseline_identical: bool,
    pub adaptivity: Vec<AdaptivityRow>,
}

struct Problem {
    spec: NetworkSpec,
    train: Dataset,
    test: Dataset,
    lik: LikelihoodSpec,
    prior: PriorSpec,
}

fn fit(settings: &TemperSettings, p: &Problem, lik: &LikelihoodSpec, cfg: &TrainConfig) -> Result<Vec<ParamVector>> {
    match settings.method {
        TemperMethod::Map => Ok(vec![train_map(&p.spec, &p.train, lik, &p.prior, cfg)?.params]),
        TemperMethod::Swag => {
            let runs = SwagRuns::train(&p.spec, &p.train, lik, &p.prior, cfg, 1, settings.collect_start, settings.swag_rank)?;
            Ok(dirac_members(runs.multi_swag(settings.samples, cfg.seed)?.samples))
        }
        TemperMethod::Sgld => run_sgld(&p.spec, &p.train, lik, &p.prior, cfg, settings.samples),
    }
}

fn max_diff(a: &[ParamVector], b: &[ParamVector]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.values().iter().zip(y.values()).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

fn base_config(settings: &TemperSettings) -> TrainConfig {
    match settings.method {
        TemperMethod::Sgld => settings.sgld.clone(),
        _ => settings.train.clone(),
    }
}

pub fn run_temper_sweep(settings: &TemperSettings, images: &ImageSet, seed: u64) -> Result<TemperResult> {
    let images = images.downsample(settings.downsample)?;
    let (train_img, test_img) = split_by_class(&images, &settings.classes, settings.train_per_class, settings.test_per_class, seed)?;
    let prov = Provenance::new("mnist", Some(seed));
    let k = settings.classes.len();
    let train = train_img.to_dataset(&settings.classes, Split::Train, prov.clone())?;
    let spec = classifier_spec(train.dim(), &settings.hidden, k)?;
    let p = Problem {
        prior: PriorSpec::isotropic(&spec, settings.prior_std)?,
        test: test_img.to_dataset(&settings.classes, Split::Test, prov)?,
        lik: LikelihoodSpec::categorical(k)?,
        spec,
        train,
    };
    let base = base_config(settings).with_seed(seed);

    let rows = settings
        .temperatures
        .par_iter()
        .map(|&t| {
            let temperature = Temperature::new(t)?;
            let lr = if settings.scale_lr { base.lr * t.min(1.0) } else { base.lr };
            let tempered = fit(settings, &p, &p.lik, &TrainConfig { temperature, lr, ..base.clone() })?;
            let powered = fit(settings, &p, &p.lik.tempered_equivalent(temperature), &TrainConfig { temperature: Temperature::ONE, lr, ..base.clone() })?;
            let pred = PredictiveSamples::from_params(&p.spec, &tempered, &p.test.inputs, &p.lik, settings.method.tag())?;
            Ok((
                TemperRow {
                    temperature: t,
                    scores: scores(&pred, &p.test.targets)?,
                    equivalence_max_diff: max_diff(&tempered, &powered),
                },
                tempered,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let baseline = fit(settings, &p, &p.lik, &base)?;
    let at_one = &rows.iter().find(|(r, _)| r.temperature == 1.0).expect("validated").1;
    let baseline_identical = baseline.len() == at_one.len()
        && baseline
            .iter()
            .zip(at_one)
            .all(|(a, b)| a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));

    let adaptivity = if settings.adaptivity_sizes.is_empty() {
        Vec::new()
    } else {
        adaptivity_study(settings, &images, &p.test, seed)?
    };
    Ok(TemperResult {
        method: settings.method,
        rows: rows.into_iter().map(|(r, _)| r).collect(),
        baseline_identical,
        adaptivity,
    })
}

fn balance(per_sample: &[Vec<f64>]) -> (f64, f64) {
    let s = per_sample.len() as f64;
    let max = per_sample.iter().map(|p| p.iter().copied().fold(0.0, f64::max)).sum::<f64>() / s;
    let entropy = per_sample
        .iter()
        .map(|p| -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>())
        .sum::<f64>()
        / s;
    (max, entropy)
}

/// SGLD posteriors under a broad prior on growing training sets: how
/// evenly each sample's dataset-averaged predictive spreads over classes.
fn adaptivity_study(settings: &TemperSettings, images: &ImageSet, test: &Dataset, seed: u64) -> Result<Vec<AdaptivityRow>> {
    let k = settings.classes.len();
    let spec = classifier_spec(test.dim(), &settings.hidden, k)?;
    let prior = PriorSpec::isotropic(&spec, settings.adaptivity_prior_std)?;
    let lik = LikelihoodSpec::categorical(k)?;
    let prior_pred = prior_predictive_summary(&spec, &prior, &test.inputs, settings.adaptivity_samples, rng::substream(seed, 0xADA0))?;
    let (max, entropy) = balance(&prior_pred.per_sample);
    let mut rows = vec![AdaptivityRow { n: 0, mean_max_class_prob: max, mean_entropy: entropy }];
    for (i, &n) in settings.adaptivity_sizes.iter().enumerate() {
        if n % k != 0 || n == 0 {
            return Err(Error::config(format!("adaptivity size {n} is not a positive multiple of {k} classes")));
        }
        let s = rng::member_seed(rng::substream(seed, 0xADA1), i);
        let (train_img, held_out) = split_by_class(images, &settings.classes, n / k, settings.test_per_class, s)?;
        let train = train_img.to_dataset(&settings.classes, Split::Train, Provenance::new("mnist", Some(s)))?;
        let held_out = held_out.to_matrix();
        let cfg = settings.sgld.with_seed(s);
        let samples = run_sgld(&spec, &train, &lik, &prior, &cfg, settings.adaptivity_samples)?;
        let per_sample = samples
            .iter()
            .map(|w| {
                let f = forward(&spec, w, &held_out)?;
                let mut mean = vec![0.0; k];
                for row in f.row_iter() {
                    mean.iter_mut().zip(softmax_row(row.iter().copied())).for_each(|(m, q)| *m += q);
                }
                mean.iter_mut().for_each(|m| *m /= f.nrows() as f64);
                Ok(mean)
            })
            .collect::<Result<Vec<_>>>()?;
        let (max, entropy) = balance(&per_sample);
        rows.push(AdaptivityRow { n, mean_max_class_prob: max, mean_entropy: entropy });
    }
    Ok(rows)
}
