//! Label-corruption sweeps on binary MNIST: GP and BNN evidence estimates.

use rayon::prelude::*;

use super::config::Config;
use super::mnist::split_by_class;
use super::settings::{train_config, vgp_config};
use crate::data::{corrupt_labels, Dataset, ImageSet, Provenance, Split};
use crate::error::{Error, Result};
use crate::gp::{corruption_sweep, gp_classify_binary, median_pairwise_distance, RbfKernel, SweepRow, VgpConfig};
use crate::inference::{laplace_log_marginal, train_map, Curvature, Schedule, TrainConfig};
use crate::metrics::{accuracy, PredictiveSamples};
use crate::nn::{LikelihoodSpec, NetworkSpec};
use crate::priors::PriorSpec;
use crate::rng;

#[derive(Debug, Clone)]
pub struct RethinkSettings {
    pub classes: [usize; 2],
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub fractions: Vec<f64>,
    /// Evidence kernel lengthscale, as a multiple of the median distance.
    pub lengthscale_factor: f64,
    /// Memorization kernel lengthscale, same units.
    pub small_lengthscale_factor: f64,
    pub signal_var: f64,
    pub vgp: VgpConfig,
    /// Random relabelings used to measure chance-level test accuracy spread.
    pub null_draws: usize,
    pub hidden: Vec<usize>,
    pub prior_std: f64,
    pub train: TrainConfig,
}

impl Default for RethinkSettings {
    fn default() -> Self {
        RethinkSettings {
            classes: [1, 7],
            train_per_class: 100,
            test_per_class: 200,
            fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            lengthscale_factor: 1.0,
            small_lengthscale_factor: 0.1,
            signal_var: 1.0,
            vgp: VgpConfig::default(),
            null_draws: 20,
            hidden: vec![50],
            prior_std: 1.0,
            train: TrainConfig {
                epochs: 300,
                batch_size: 50,
                lr: 2e-4,
                schedule: Schedule::ConstantThenDecay { final_ratio: 0.01 },
                ..Default::default()
            },
        }
    }
}

impl RethinkSettings {
    pub fn from_config(c: &Config) -> Result<Self> {
        let d = Self::default();
        let classes: Vec<usize> = c.list_or("data", "classes", d.classes.to_vec())?;
        let [a, b] = classes[..] else {
            return Err(Error::config("data.classes must name exactly two digits"));
        };
        if a == b {
            return Err(Error::config("data.classes must differ"));
        }
        Ok(RethinkSettings {
            classes: [a, b],
            train_per_class: c.get_or("data", "train_per_class", d.train_per_class)?,
            test_per_class: c.get_or("data", "test_per_class", d.test_per_class)?,
            fractions: c.list_or("sweep", "fractions", d.fractions)?,
            lengthscale_factor: c.get_or("gp", "lengthscale_factor", d.lengthscale_factor)?,
            small_lengthscale_factor: c.get_or("gp", "small_lengthscale_factor", d.small_lengthscale_factor)?,
            signal_var: c.get_or("gp", "signal_var", d.signal_var)?,
            vgp: vgp_config(c, "gp", &d.vgp)?,
            null_draws: c.get_or("gp", "null_draws", d.null_draws)?,
            hidden: c.list_or("bnn", "hidden", d.hidden)?,
            prior_std: c.get_or("bnn", "prior_std", d.prior_std)?,
            train: train_config(c, "bnn", &d.train)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RethinkRow {
    /// `gp`, `gp_small_lengthscale` or `bnn_laplace`.
    pub method: &'static str,
    pub fraction: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    /// GP ELBO or Laplace log marginal likelihood.
    pub evidence: f64,
}

#[derive(Debug, Clone)]
pub struct RethinkResult {
    pub rows: Vec<RethinkRow>,
    pub lengthscale: f64,
    pub small_lengthscale: f64,
    /// Standard deviation of the small-lengthscale GP's test accuracy over
    /// fully random training labels.
    pub chance_se: f64,
    pub n_train: usize,
    pub n_test: usize,
}

impl RethinkResult {
    pub fn row(&self, method: &str, fraction: f64) -> Option<&RethinkRow> {
        self.rows.iter().find(|r| r.method == method && r.fraction == fraction)
    }
}

fn gp_rows(method: &'static str, rows: Vec<SweepRow>) -> Vec<RethinkRow> {
    rows.into_iter()
        .map(|r| RethinkRow {
            method,
            fraction: r.fraction,
            train_acc: r.train_acc,
            test_acc: r.test_acc,
            evidence: r.evidence_estimate,
        })
        .collect()
}

/// Runs the GP sweeps at both lengthscales and the BNN Laplace sweep. All
/// three see the same corrupted labels for a given fraction.
pub fn run_rethink(settings: &RethinkSettings, images: &ImageSet, seed: u64) -> Result<RethinkResult> {
    let (train_img, test_img) = split_by_class(images, &settings.classes, settings.train_per_class, settings.test_per_class, seed)?;
    let prov = Provenance::new("mnist-binary", Some(seed)).with("classes", format!("{:?}", settings.classes));
    let train = train_img.to_dataset(&settings.classes, Split::Train, prov.clone())?;
    let test = test_img.to_dataset(&settings.classes, Split::Test, prov)?;

    let median = median_pairwise_distance(&train.inputs)?;
    let lengthscale = settings.lengthscale_factor * median;
    let small_lengthscale = settings.small_lengthscale_factor * median;
    let kernel = RbfKernel::new(lengthscale, settings.signal_var)?;
    let small = RbfKernel::new(small_lengthscale, settings.signal_var)?;

    let ((gp, gp_small), (bnn, chance_se)) = rayon::join(
        || {
            rayon::join(
                || corruption_sweep(&train, &test, &kernel, &settings.fractions, seed, &settings.vgp),
                || corruption_sweep(&train, &test, &small, &settings.fractions, seed, &settings.vgp),
            )
        },
        || rayon::join(|| bnn_sweep(settings, &train, &test, seed), || chance_spread(settings, &train, &test, &small, seed)),
    );
    let mut rows = gp_rows("gp", gp?);
    rows.extend(gp_rows("gp_small_lengthscale", gp_small?));
    rows.extend(bnn?);
    Ok(RethinkResult {
        rows,
        lengthscale,
        small_lengthscale,
        chance_se: chance_se?,
        n_train: train.len(),
        n_test: test.len(),
    })
}

fn chance_spread(settings: &RethinkSettings, train: &Dataset, test: &Dataset, kernel: &RbfKernel, seed: u64) -> Result<f64> {
    if settings.null_draws < 2 {
        return Err(Error::config("gp.null_draws must be at least 2"));
    }
    let test_labels = test.labels().expect("classification data");
    let base = rng::substream(seed, 0x9E11);
    let accs = (0..settings.null_draws)
        .into_par_iter()
        .map(|d| {
            let random = corrupt_labels(train, 1.0, rng::member_seed(base, d))?;
            let clf = gp_classify_binary(&random.inputs, random.labels().expect("classification data"), kernel, &settings.vgp)?;
            clf.accuracy(&test.inputs, test_labels)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = accs.len() as f64;
    let mean = accs.iter().sum::<f64>() / n;
    Ok((accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)).sqrt())
}

fn bnn_sweep(settings: &RethinkSettings, train: &Dataset, test: &Dataset, seed: u64) -> Result<Vec<RethinkRow>> {
    let mut sizes = vec![train.dim()];
    sizes.extend(&settings.hidden);
    sizes.push(2);
    let spec = NetworkSpec::mlp(&sizes)?;
    let lik = LikelihoodSpec::categorical(2)?;
    let prior = PriorSpec::isotropic(&spec, settings.prior_std)?;
    let cfg = settings.train.with_seed(seed);
    settings
        .fractions
        .par_iter()
        .enumerate()
        .map(|(i, &fraction)| {
            // same corruption seed as the GP sweep
            let data = corrupt_labels(train, fraction, rng::member_seed(seed, i))?;
            let map = train_map(&spec, &data, &lik, &prior, &cfg)?.params;
            let est = laplace_log_marginal(&spec, &map, &data, &lik, &prior, Curvature::ExpectedFisher)?;
            let on_train = PredictiveSamples::from_params(&spec, std::slice::from_ref(&map), &data.inputs, &lik, "map")?;
            let on_test = PredictiveSamples::from_params(&spec, std::slice::from_ref(&map), &test.inputs, &lik, "map")?;
            Ok(RethinkRow {
                method: "bnn_laplace",
                fraction,
                train_acc: accuracy(&on_train, &data.targets)?,
                test_acc: accuracy(&on_test, &test.targets)?,
                evidence: est.log_marginal,
            })
        })
        .collect()
}
