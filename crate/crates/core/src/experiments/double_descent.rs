//! Width sweep under label noise: SGD against SWAG and MultiSWAG.

use super::common::{classifier_spec, dirac_members, scores, Scores};
use super::config::Config;
use super::mnist::split_by_class;
use super::settings::train_config;
use crate::data::{corrupt_labels, width_sweep, ImageSet, Provenance, Split};
use crate::error::{Error, Result};
use crate::inference::{Schedule, SwagRuns, TrainConfig};
use crate::metrics::PredictiveSamples;
use crate::nn::LikelihoodSpec;
use crate::priors::PriorSpec;
use crate::rng;

#[derive(Debug, Clone)]
pub struct DoubleDescentSettings {
    pub classes: Vec<usize>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Average-pooling factor applied to the images.
    pub downsample: usize,
    pub corruption: f64,
    pub base_hidden: Vec<usize>,
    pub multipliers: Vec<usize>,
    pub prior_std: f64,
    pub train: TrainConfig,
    pub swag_rank: usize,
    pub collect_start: usize,
    pub samples_per_model: usize,
    pub model_counts: Vec<usize>,
}

impl Default for DoubleDescentSettings {
    fn default() -> Self {
        DoubleDescentSettings {
            classes: (0..10).collect(),
            train_per_class: 50,
            test_per_class: 100,
            downsample: 2,
            corruption: 0.2,
            base_hidden: vec![8],
            multipliers: vec![1, 2, 4, 8, 16, 32],
            prior_std: 1.0,
            train: TrainConfig {
                epochs: 120,
                batch_size: 50,
                lr: 5e-4,
                schedule: Schedule::ConstantThenDecay { final_ratio: 1.0 },
                ..Default::default()
            },
            swag_rank: 20,
            collect_start: 60,
            samples_per_model: 20,
            model_counts: vec![1, 3, 5, 10],
        }
    }
}

impl DoubleDescentSettings {
    pub fn from_config(c: &Config) -> Result<Self> {
        let d = Self::default();
        let s = DoubleDescentSettings {
            classes: c.list_or("data", "classes", d.classes)?,
            train_per_class: c.get_or("data", "train_per_class", d.train_per_class)?,
            test_per_class: c.get_or("data", "test_per_class", d.test_per_class)?,
            downsample: c.get_or("data", "downsample", d.downsample)?,
            corruption: c.get_or("data", "corruption", d.corruption)?,
            base_hidden: c.list_or("model", "base_hidden", d.base_hidden)?,
            multipliers: c.list_or("model", "width_multipliers", d.multipliers)?,
            prior_std: c.get_or("model", "prior_std", d.prior_std)?,
            train: train_config(c, "train", &d.train)?,
            swag_rank: c.get_or("swag", "rank", d.swag_rank)?,
            collect_start: c.get_or("swag", "collect_start", d.collect_start)?,
            samples_per_model: c.get_or("swag", "samples_per_model", d.samples_per_model)?,
            model_counts: c.list_or("swag", "models", d.model_counts)?,
        };
        if s.model_counts.is_empty() || s.model_counts.contains(&0) {
            return Err(Error::config("swag.models must list positive counts"));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleDescentRow {
    /// `sgd`, `swag` or `multiswag`.
    pub method: &'static str,
    pub multiplier: usize,
    pub width: usize,
    pub params: usize,
    /// Independent models (1 for SGD and SWAG).
    pub models: usize,
    pub scores: Scores,
}

#[derive(Debug, Clone)]
pub struct DoubleDescentResult {
    pub rows: Vec<DoubleDescentRow>,
}

impl DoubleDescentResult {
    pub fn get(&self, method: &str, multiplier: usize, models: usize) -> Option<&DoubleDescentRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.multiplier == multiplier && r.models == models)
    }
}

/// For every width, trains `max(model_counts)` SWAG runs. SGD is the final
/// iterate of run 0, SWAG its SWAG posterior, and MultiSWAG(M) the first M
/// runs; every SWAG component contributes `samples_per_model` draws.
pub fn run_double_descent(settings: &DoubleDescentSettings, images: &ImageSet, seed: u64) -> Result<DoubleDescentResult> {
    let images = images.downsample(settings.downsample)?;
    let (train_img, test_img) = split_by_class(&images, &settings.classes, settings.train_per_class, settings.test_per_class, seed)?;
    let prov = Provenance::new("mnist", Some(seed));
    let clean = train_img.to_dataset(&settings.classes, Split::Train, prov.clone())?;
    let train = corrupt_labels(&clean, settings.corruption, rng::substream(seed, 0xC0))?;
    let test = test_img.to_dataset(&settings.classes, Split::Test, prov)?;
    let k = settings.classes.len();
    let lik = LikelihoodSpec::categorical(k)?;
    let base = classifier_spec(train.dim(), &settings.base_hidden, k)?;
    let specs = width_sweep(&base, &settings.multipliers)?;
    let max_models = *settings.model_counts.iter().max().expect("validated");
    let cfg = settings.train.with_seed(seed);

    let per_width = specs
        .iter()
        .zip(&settings.multipliers)
        .map(|(spec, &mult)| {
            let prior = PriorSpec::isotropic(spec, settings.prior_std)?;
            let runs = SwagRuns::train(spec, &train, &lik, &prior, &cfg, max_models, settings.collect_start, settings.swag_rank)?;
            let sgd = PredictiveSamples::from_params(spec, std::slice::from_ref(&runs.fits[0].final_iterate), &test.inputs, &lik, "sgd")?;
            let draws = dirac_members(runs.multi_swag(settings.samples_per_model, seed)?.samples);
            let pred = PredictiveSamples::from_params(spec, &draws, &test.inputs, &lik, "multiswag")?;
            let row = |method, models, scores| DoubleDescentRow {
                method,
                multiplier: mult,
                width: spec.hidden_sizes().iter().sum(),
                params: spec.count_params(),
                models,
                scores,
            };
            let mut rows = vec![
                row("sgd", 1, scores(&sgd, &test.targets)?),
                row("swag", 1, scores(&pred.truncated(settings.samples_per_model)?, &test.targets)?),
            ];
            for &m in &settings.model_counts {
                let sub = pred.truncated(m * settings.samples_per_model)?;
                rows.push(row("multiswag", m, scores(&sub, &test.targets)?));
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DoubleDescentResult {
        rows: per_width.into_iter().flatten().collect(),
    })
}
