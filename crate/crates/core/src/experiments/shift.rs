//! Deep ensembles, MultiSWA and MultiSWAG on perturbed test images.

use super::common::{classifier_spec, dirac_members, scores, Scores};
use super::config::Config;
use super::mnist::split_by_class;
use super::settings::train_config;
use crate::data::{perturb_with, ImageSet, Perturbation, PerturbationKind, Provenance, Split};
use crate::error::{Error, Result};
use crate::inference::{Schedule, SwagRuns, TrainConfig};
use crate::metrics::PredictiveSamples;
use crate::nn::{LikelihoodSpec, Targets};
use crate::priors::PriorSpec;
use crate::rng;

#[derive(Debug, Clone)]
pub struct ShiftSettings {
    pub classes: Vec<usize>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub downsample: usize,
    pub hidden: Vec<usize>,
    pub prior_std: f64,
    pub train: TrainConfig,
    pub swag_rank: usize,
    pub collect_start: usize,
    pub samples_per_model: usize,
    pub models: usize,
    pub kinds: Vec<PerturbationKind>,
    pub levels: Vec<usize>,
    /// Pixel noise standard deviation added per level.
    pub noise_step: f64,
}

impl Default for ShiftSettings {
    fn default() -> Self {
        ShiftSettings {
            classes: (0..10).collect(),
            train_per_class: 50,
            test_per_class: 30,
            downsample: 1,
            hidden: vec![100],
            prior_std: 1.0,
            train: TrainConfig {
                epochs: 100,
                batch_size: 50,
                lr: 5e-4,
                schedule: Schedule::ConstantThenDecay { final_ratio: 1.0 },
                ..Default::default()
            },
            swag_rank: 20,
            collect_start: 50,
            samples_per_model: 20,
            models: 5,
            kinds: vec![PerturbationKind::GaussianNoise, PerturbationKind::Translate],
            noise_step: 0.1,
            levels: (0..=5).collect(),
        }
    }
}

impl ShiftSettings {
    pub fn from_config(c: &Config) -> Result<Self> {
        let d = Self::default();
        let s = ShiftSettings {
            classes: c.list_or("data", "classes", d.classes)?,
            train_per_class: c.get_or("data", "train_per_class", d.train_per_class)?,
            test_per_class: c.get_or("data", "test_per_class", d.test_per_class)?,
            downsample: c.get_or("data", "downsample", d.downsample)?,
            hidden: c.list_or("model", "hidden", d.hidden)?,
            prior_std: c.get_or("model", "prior_std", d.prior_std)?,
            train: train_config(c, "train", &d.train)?,
            swag_rank: c.get_or("swag", "rank", d.swag_rank)?,
            collect_start: c.get_or("swag", "collect_start", d.collect_start)?,
            samples_per_model: c.get_or("swag", "samples_per_model", d.samples_per_model)?,
            models: c.get_or("swag", "models", d.models)?,
            kinds: c.list_or("shift", "kinds", d.kinds)?,
            levels: c.list_or("shift", "levels", d.levels)?,
            noise_step: c.get_or("shift", "noise_step", d.noise_step)?,
        };
        if s.models == 0 {
            return Err(Error::config("swag.models must be positive"));
        }
        if s.levels.iter().any(|&l| l > 5) {
            return Err(Error::config("shift.levels must lie in 0..=5"));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftRow {
    /// `deep_ensemble`, `multiswa` or `multiswag`.
    pub method: &'static str,
    pub kind: PerturbationKind,
    pub level: usize,
    /// Independently trained models.
    pub models: usize,
    pub scores: Scores,
}

#[derive(Debug, Clone)]
pub struct ShiftResult {
    pub rows: Vec<ShiftRow>,
}

impl ShiftResult {
    pub fn get(&self, method: &str, kind: PerturbationKind, level: usize, models: usize) -> Option<&ShiftRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.kind == kind && r.level == level && r.models == models)
    }
}

/// Trains `models` SWAG runs once and scores every method and model count
/// on each perturbed copy of the test set. Level 0 is the clean test set.
pub fn run_shift_eval(settings: &ShiftSettings, images: &ImageSet, seed: u64) -> Result<ShiftResult> {
    let images = images.downsample(settings.downsample)?;
    let (train_img, test_img) = split_by_class(&images, &settings.classes, settings.train_per_class, settings.test_per_class, seed)?;
    let k = settings.classes.len();
    let train = train_img.to_dataset(&settings.classes, Split::Train, Provenance::new("mnist", Some(seed)))?;
    let spec = classifier_spec(train.dim(), &settings.hidden, k)?;
    let lik = LikelihoodSpec::categorical(k)?;
    let prior = PriorSpec::isotropic(&spec, settings.prior_std)?;
    let cfg = settings.train.with_seed(seed);
    let runs = SwagRuns::train(&spec, &train, &lik, &prior, &cfg, settings.models, settings.collect_start, settings.swag_rank)?;
    let members = [
        ("deep_ensemble", dirac_members(runs.deep_ensemble()), 1),
        ("multiswa", dirac_members(runs.multi_swa()), 1),
        ("multiswag", dirac_members(runs.multi_swag(settings.samples_per_model, seed)?.samples), settings.samples_per_model),
    ];
    let test_labels: Vec<usize> = test_img
        .labels
        .iter()
        .map(|l| settings.classes.iter().position(|c| c == l).expect("split keeps requested classes"))
        .collect();
    let targets = Targets::Class(test_labels);

    let mut rows = Vec::new();
    for (ki, &kind) in settings.kinds.iter().enumerate() {
        for &level in &settings.levels {
            let s = rng::member_seed(rng::substream(seed, 0x5B1F + ki as u64), level);
            let inputs = perturb_with(&test_img, &Perturbation { noise_step: settings.noise_step, ..Perturbation::new(kind) }, level, s)?.to_matrix();
            for (method, params, per_model) in &members {
                let pred = PredictiveSamples::from_params(&spec, params, &inputs, &lik, *method)?;
                for m in 1..=settings.models {
                    rows.push(ShiftRow {
                        method,
                        kind,
                        level,
                        models: m,
                        scores: scores(&pred.truncated(m * per_model)?, &targets)?,
                    });
                }
            }
        }
    }
    Ok(ShiftResult { rows })
}
