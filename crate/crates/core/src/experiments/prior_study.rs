//! Function-space behaviour of Gaussian weight priors on MNIST inputs.

use nalgebra::DMatrix;

use super::common::classifier_spec;
use super::config::Config;
use super::mnist::split_by_class;
use crate::data::{ImageSet, PerturbationKind};
use crate::error::{Error, Result};
use crate::priors::{
    calibrate_rbf_lengthscale, perturbation_correlation_decay, prior_function_values, prior_logit_correlation, prior_predictive_summary,
    CorrelationDiagram, CorrelationModel, DecayCurve, PriorPredictive, PriorSpec,
};
use crate::rng;

#[derive(Debug, Clone)]
pub struct PriorStudySettings {
    pub classes: Vec<usize>,
    pub per_class: usize,
    pub hidden: Vec<usize>,
    pub alphas: Vec<f64>,
    pub samples: usize,
    pub class_index: usize,
    pub predictive_alphas: Vec<f64>,
    pub predictive_samples: usize,
    pub path_points: usize,
    pub path_functions: usize,
    pub decay_alpha: f64,
    pub decay_samples: usize,
    pub decay_images: usize,
    pub perturbations: Vec<PerturbationKind>,
}

impl Default for PriorStudySettings {
    fn default() -> Self {
        PriorStudySettings {
            classes: vec![0, 1, 2, 4, 7],
            per_class: 20,
            hidden: vec![200, 200],
            alphas: vec![0.02, 0.1, 1.0],
            samples: 500,
            class_index: 0,
            predictive_alphas: vec![0.02, 0.1, 1.0, 10f64.sqrt()],
            predictive_samples: 200,
            path_points: 41,
            path_functions: 10,
            decay_alpha: 1.0,
            decay_samples: 500,
            decay_images: 50,
            perturbations: vec![PerturbationKind::GaussianNoise, PerturbationKind::Translate],
        }
    }
}

impl PriorStudySettings {
    pub fn from_config(c: &Config) -> Result<Self> {
        let d = Self::default();
        let s = PriorStudySettings {
            classes: c.list_or("data", "classes", d.classes)?,
            per_class: c.get_or("data", "per_class", d.per_class)?,
            hidden: c.list_or("model", "hidden", d.hidden)?,
            alphas: c.list_or("correlation", "alphas", d.alphas)?,
            samples: c.get_or("correlation", "samples", d.samples)?,
            class_index: c.get_or("correlation", "class_index", d.class_index)?,
            predictive_alphas: c.list_or("predictive", "alphas", d.predictive_alphas)?,
            predictive_samples: c.get_or("predictive", "samples", d.predictive_samples)?,
            path_points: c.get_or("path", "points", d.path_points)?,
            path_functions: c.get_or("path", "functions", d.path_functions)?,
            decay_alpha: c.get_or("decay", "alpha", d.decay_alpha)?,
            decay_samples: c.get_or("decay", "samples", d.decay_samples)?,
            decay_images: c.get_or("decay", "images", d.decay_images)?,
            perturbations: c.list_or("decay", "kinds", d.perturbations)?,
        };
        if s.classes.len() < 2 {
            return Err(Error::config("data.classes needs at least two digits"));
        }
        if s.path_points < 2 {
            return Err(Error::config("path.points must be at least 2"));
        }
        Ok(s)
    }
}

/// Prior function values along a norm-preserving path between two images.
#[derive(Debug, Clone)]
pub struct PathTrace {
    pub alpha: f64,
    pub t: Vec<f64>,
    /// `functions × points`.
    pub values: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct PriorStudyResult {
    pub diagrams: Vec<(f64, CorrelationDiagram)>,
    pub predictive: Vec<(f64, PriorPredictive)>,
    pub paths: Vec<PathTrace>,
    /// Endpoint labels of the interpolation path.
    pub path_labels: (usize, usize),
    pub decay: Vec<(PerturbationKind, Vec<DecayCurve>)>,
    pub rbf_lengthscale: f64,
}

/// `(1−t)·x₀ + t·x₁` rescaled to the norm of `x₀`, one row per `t`.
pub fn interpolation_path(x0: &[f64], x1: &[f64], points: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if x0.len() != x1.len() {
        return Err(Error::dim("path endpoint", x0.len(), x1.len()));
    }
    let norm0 = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let t: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let mut out = DMatrix::zeros(points, x0.len());
    for (r, &ti) in t.iter().enumerate() {
        let x: Vec<f64> = x0.iter().zip(x1).map(|(a, b)| (1.0 - ti) * a + ti * b).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Degenerate("interpolation passes through the origin".into()));
        }
        for (c, v) in x.iter().enumerate() {
            out[(r, c)] = v * norm0 / norm;
        }
    }
    Ok((t, out))
}

pub fn run_prior_study(settings: &PriorStudySettings, images: &ImageSet, seed: u64) -> Result<PriorStudyResult> {
    let (subset, _) = split_by_class(images, &settings.classes, settings.per_class, 0, seed)?;
    let inputs = subset.to_matrix();
    let spec = classifier_spec(inputs.ncols(), &settings.hidden, 10)?;

    let diagrams = settings
        .alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let prior = PriorSpec::isotropic(&spec, alpha)?;
            let s = rng::member_seed(rng::substream(seed, 0xC044), i);
            Ok((alpha, prior_logit_correlation(&spec, &prior, &inputs, &subset.labels, settings.class_index, settings.samples, s)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let predictive = settings
        .predictive_alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let prior = PriorSpec::isotropic(&spec, alpha)?;
            let s = rng::member_seed(rng::substream(seed, 0x99ED), i);
            Ok((alpha, prior_predictive_summary(&spec, &prior, &inputs, settings.predictive_samples, s)?))
        })
        .collect::<Result<Vec<_>>>()?;

    // endpoints: first image of the first two classes
    let a = subset.labels.iter().position(|&l| l == settings.classes[0]).expect("class present");
    let b = subset.labels.iter().position(|&l| l == settings.classes[1]).expect("class present");
    let (t, path) = interpolation_path(subset.image(a), subset.image(b), settings.path_points)?;
    let paths = settings
        .alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let prior = PriorSpec::isotropic(&spec, alpha)?;
            let s = rng::member_seed(rng::substream(seed, 0x9A74), i);
            let values = prior_function_values(&spec, &prior, &path, settings.class_index, settings.path_functions, s)?;
            Ok(PathTrace { alpha, t: t.clone(), values })
        })
        .collect::<Result<Vec<_>>>()?;

    let decay_set = subset.select(&decay_rows(&subset, settings.decay_images));
    let decay_prior = PriorSpec::isotropic(&spec, settings.decay_alpha)?;
    let bnn = CorrelationModel::Bnn {
        spec: spec.clone(),
        prior: decay_prior,
        class_index: settings.class_index,
        samples: settings.decay_samples,
    };
    // RBF baseline matched to the network's average pairwise correlation
    let target = diagrams
        .iter()
        .find(|(a, _)| *a == settings.decay_alpha)
        .map(|(_, d)| d.off_diagonal_mean())
        .unwrap_or(0.5);
    let rbf_lengthscale = calibrate_rbf_lengthscale(target, &inputs)?;
    let models = [bnn, CorrelationModel::Linear, CorrelationModel::Rbf { lengthscale: rbf_lengthscale }];
    let levels: Vec<usize> = (0..=5).collect();
    let decay = settings
        .perturbations
        .iter()
        .map(|&kind| {
            let curves = models
                .iter()
                .map(|m| perturbation_correlation_decay(m, &decay_set, kind, &levels, rng::substream(seed, 0xDECA)))
                .collect::<Result<Vec<_>>>()?;
            Ok((kind, curves))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PriorStudyResult {
        diagrams,
        predictive,
        paths,
        path_labels: (settings.classes[0], settings.classes[1]),
        decay,
        rbf_lengthscale,
    })
}

/// Evenly spaced rows, at most `n`.
fn decay_rows(set: &ImageSet, n: usize) -> Vec<usize> {
    let n = n.clamp(1, set.len());
    (0..n).map(|i| i * set.len() / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_keeps_the_start_norm() {
        let x0 = [3.0, 4.0, 0.0];
        let x1 = [0.0, 1.0, 1.0];
        let (t, p) = interpolation_path(&x0, &x1, 5).unwrap();
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        for r in 0..5 {
            assert!((p.row(r).norm() - 5.0).abs() < 1e-12);
        }
        assert_eq!(p.row(0).iter().copied().collect::<Vec<_>>(), x0.to_vec());
        let end = 5.0 / 2f64.sqrt();
        assert!((p[(4, 1)] - end).abs() < 1e-12 && (p[(4, 2)] - end).abs() < 1e-12);
    }
}
