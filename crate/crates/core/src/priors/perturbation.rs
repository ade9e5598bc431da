use nalgebra::{DMatrix, DVector};

use super::correlation::prior_function_values;
use super::spec::PriorSpec;
use crate::data::{perturb, ImageSet, PerturbationKind};
use crate::error::{Error, Result};
use crate::nn::NetworkSpec;
use crate::rng;

/// Model whose prior correlation between an image and its perturbed copy is
/// tracked.
#[derive(Debug, Clone)]
pub enum CorrelationModel {
    /// Prior-sampled network; correlations of logit `class_index` over `samples` draws.
    Bnn {
        spec: NetworkSpec,
        prior: PriorSpec,
        class_index: usize,
        samples: usize,
    },
    /// `f(x) = wᵀx`, `w ~ N(0, α²I)`: `corr = xᵀy / (‖x‖‖y‖)` for every α.
    Linear,
    /// `corr = exp(−‖x−y‖² / 2ℓ²)`.
    Rbf { lengthscale: f64 },
}

impl CorrelationModel {
    pub fn tag(&self) -> &'static str {
        match self {
            CorrelationModel::Bnn { .. } => "bnn",
            CorrelationModel::Linear => "linear",
            CorrelationModel::Rbf { .. } => "rbf",
        }
    }
}

/// Mean ± one standard deviation (across images) of the clean/perturbed
/// correlation at each intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub model: &'static str,
    pub intensities: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(Error::Degenerate("zero-variance logit".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

pub(crate) fn cosine(x: &[f64], y: &[f64]) -> Result<f64> {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::Degenerate("zero-norm image in linear correlation".into()));
    }
    Ok(dot / (nx * ny))
}

fn rbf(x: &[f64], y: &[f64], lengthscale: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * lengthscale * lengthscale)).exp()
}

fn per_image_correlations(
    model: &CorrelationModel,
    clean: &DMatrix<f64>,
    perturbed: &DMatrix<f64>,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = clean.nrows();
    let row = |m: &DMatrix<f64>, i: usize| -> Vec<f64> { m.row(i).iter().copied().collect() };
    match model {
        CorrelationModel::Linear => (0..n).map(|i| cosine(&row(clean, i), &row(perturbed, i))).collect(),
        CorrelationModel::Rbf { lengthscale } => Ok((0..n)
            .map(|i| rbf(&row(clean, i), &row(perturbed, i), *lengthscale))
            .collect()),
        CorrelationModel::Bnn {
            spec,
            prior,
            class_index,
            samples,
        } => {
            let both = DMatrix::from_fn(2 * n, clean.ncols(), |r, c| {
                if r < n {
                    clean[(r, c)]
                } else {
                    perturbed[(r - n, c)]
                }
            });
            let logits = prior_function_values(spec, prior, &both, *class_index, *samples, seed)?;
            (0..n)
                .map(|i| {
                    let a: Vec<f64> = logits.column(i).iter().copied().collect();
                    let b: Vec<f64> = logits.column(n + i).iter().copied().collect();
                    pearson(&a, &b)
                })
                .collect()
        }
    }
}

/// Correlation between `f(x)` and `f(x̃)` as perturbation intensity grows.
/// Intensity 0 is the identity perturbation.
pub fn perturbation_correlation_decay(
    model: &CorrelationModel,
    images: &ImageSet,
    kind: PerturbationKind,
    intensities: &[usize],
    seed: u64,
) -> Result<DecayCurve> {
    if intensities.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::config("intensities must be sorted ascending"));
    }
    let clean = images.to_matrix();
    let mut mean = Vec::with_capacity(intensities.len());
    let mut std = Vec::with_capacity(intensities.len());
    for &level in intensities {
        let perturbed = perturb(images, kind, level, rng::substream(seed, level as u64))?.to_matrix();
        let corr = per_image_correlations(model, &clean, &perturbed, seed)?;
        let m = corr.iter().sum::<f64>() / corr.len() as f64;
        let v = corr.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / corr.len() as f64;
        mean.push(m);
        std.push(v.sqrt());
    }
    Ok(DecayCurve {
        model: model.tag(),
        intensities: intensities.to_vec(),
        mean,
        std,
    })
}

fn pairwise_sq_distances(images: &DMatrix<f64>) -> Vec<f64> {
    let n = images.nrows();
    let rows: Vec<DVector<f64>> = (0..n).map(|i| images.row(i).transpose()).collect();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((&rows[i] - &rows[j]).norm_squared());
        }
    }
    out
}

/// Mean RBF correlation over all distinct image pairs.
pub fn mean_pairwise_rbf(images: &DMatrix<f64>, lengthscale: f64) -> f64 {
    let d2 = pairwise_sq_distances(images);
    mean_rbf(&d2, lengthscale)
}

fn mean_rbf(d2: &[f64], lengthscale: f64) -> f64 {
    let s = 2.0 * lengthscale * lengthscale;
    d2.iter().map(|d| (-d / s).exp()).sum::<f64>() / d2.len() as f64
}

/// Bisection (in log ℓ) for the lengthscale whose mean pairwise RBF
/// correlation equals `target` within 1e-3.
pub fn calibrate_rbf_lengthscale(target: f64, images: &DMatrix<f64>) -> Result<f64> {
    if images.nrows() < 2 {
        return Err(Error::config("calibration needs at least two images"));
    }
    let d2 = pairwise_sq_distances(images);
    let positive: Vec<f64> = d2.iter().copied().filter(|&d| d > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::Degenerate(
            "all images identical: every lengthscale gives correlation 1".into(),
        ));
    }
    let floor = (d2.len() - positive.len()) as f64 / d2.len() as f64;
    if !(target > floor && target < 1.0) {
        return Err(Error::config(format!(
            "target correlation {target} unreachable; attainable range is ({floor}, 1)"
        )));
    }
    let dmin = positive.iter().copied().fold(f64::INFINITY, f64::min).sqrt();
    let dmax = positive.iter().copied().fold(0.0, f64::max).sqrt();
    let (mut lo, mut hi) = ((dmin * 1e-3).ln(), (dmax * 1e3).ln());
    while mean_rbf(&d2, lo.exp()) > target {
        lo -= 5.0;
    }
    while mean_rbf(&d2, hi.exp()) < target {
        hi += 5.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = mean_rbf(&d2, mid.exp());
        if (m - target).abs() < 1e-3 && hi - lo < 1e-10 {
            return Ok(mid.exp());
        }
        if m < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if (mean_rbf(&d2, mid.exp()) - target).abs() < 1e-3 {
        Ok(mid.exp())
    } else {
        Err(Error::numerical("lengthscale bisection did not converge"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_orthogonal_is_zero() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn identity_intensity_gives_one() {
        let images = ImageSet::new(2, 2, 1, vec![0.1, 0.9, 0.5, 0.0, 0.3, 0.3, 0.8, 0.1], vec![0, 1]).unwrap();
        let spec = NetworkSpec::mlp(&[4, 16, 2]).unwrap();
        let prior = PriorSpec::isotropic(&spec, 1.0).unwrap();
        for model in [
            CorrelationModel::Linear,
            CorrelationModel::Rbf { lengthscale: 0.7 },
            CorrelationModel::Bnn {
                spec,
                prior,
                class_index: 0,
                samples: 100,
            },
        ] {
            let curve = perturbation_correlation_decay(
                &model,
                &images,
                PerturbationKind::GaussianNoise,
                &[0],
                3,
            )
            .unwrap();
            assert!((curve.mean[0] - 1.0).abs() < 1e-12, "{}", curve.model);
        }
    }

    #[test]
    fn calibration_errors() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(calibrate_rbf_lengthscale(1.0, &x).is_err());
        let same = DMatrix::from_row_slice(2, 2, &[0.3, 0.3, 0.3, 0.3]);
        assert!(matches!(
            calibrate_rbf_lengthscale(0.5, &same),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn calibration_hits_target() {
        let x = DMatrix::from_fn(10, 5, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0);
        for target in [0.2, 0.5, 0.9] {
            let l = calibrate_rbf_lengthscale(target, &x).unwrap();
            assert!((mean_pairwise_rbf(&x, l) - target).abs() < 1e-3);
        }
    }
}
