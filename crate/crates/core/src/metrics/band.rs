use super::predictive::{PredictiveKind, PredictiveSamples};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandMode {
    /// `mean ± k·σ`, σ from the law of total variance over the Gaussian
    /// mixture; `include_noise` adds the observation variance.
    Gaussian { k: f64, include_noise: bool },
    /// Empirical quantiles of the sampled function values.
    Quantile { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Smallest sample `x` with empirical CDF `F(x) ≥ q`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let k = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

pub fn predictive_band(pred: &PredictiveSamples, mode: BandMode) -> Result<Band> {
    let PredictiveKind::Regression { noise_variance } = pred.kind else {
        return Err(Error::config("predictive bands need a regression predictive"));
    };
    let n = pred.n_inputs();
    let mut band = Band {
        mean: Vec::with_capacity(n),
        lower: Vec::with_capacity(n),
        upper: Vec::with_capacity(n),
    };
    for i in 0..n {
        let s = pred.regression_samples(i);
        let j = s.len() as f64;
        let mean = s.iter().sum::<f64>() / j;
        band.mean.push(mean);
        match mode {
            BandMode::Gaussian { k, include_noise } => {
                let spread = s.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / j;
                let var = spread + if include_noise { noise_variance } else { 0.0 };
                band.lower.push(mean - k * var.sqrt());
                band.upper.push(mean + k * var.sqrt());
            }
            BandMode::Quantile { lower, upper } => {
                if !(0.0..=1.0).contains(&lower) || !(lower..=1.0).contains(&upper) {
                    return Err(Error::config("quantiles must satisfy 0 <= lower <= upper <= 1"));
                }
                let mut sorted = s.to_vec();
                sorted.sort_by(f64::total_cmp);
                band.lower.push(quantile(&sorted, lower));
                band.upper.push(quantile(&sorted, upper));
            }
        }
    }
    Ok(band)
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;

    fn pred(values: &[f64], noise: f64) -> PredictiveSamples {
        let draws: Vec<DMatrix<f64>> = values.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect();
        PredictiveSamples::from_draws(
            DMatrix::zeros(1, 1),
            PredictiveKind::Regression { noise_variance: noise },
            &draws,
            "t",
        )
        .unwrap()
    }

    #[test]
    fn single_draw_has_zero_width_without_noise() {
        let b = predictive_band(&pred(&[1.5], 0.04), BandMode::Gaussian { k: 3.0, include_noise: false }).unwrap();
        assert_eq!((b.lower[0], b.mean[0], b.upper[0]), (1.5, 1.5, 1.5));
        let b = predictive_band(&pred(&[1.5], 0.04), BandMode::Gaussian { k: 3.0, include_noise: true }).unwrap();
        assert!((b.upper[0] - 2.1).abs() < 1e-12);
    }

    #[test]
    fn total_variance() {
        // Var = σ² + Var_j(f): 0.5 + ((−1)² + 1²)/2 = 1.5.
        let b = predictive_band(&pred(&[-1.0, 1.0], 0.5), BandMode::Gaussian { k: 1.0, include_noise: true }).unwrap();
        assert!((b.upper[0] - 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn quantile_band() {
        let b = predictive_band(&pred(&[1.0, -1.0], 0.1), BandMode::Quantile { lower: 0.25, upper: 0.75 }).unwrap();
        assert_eq!((b.lower[0], b.upper[0]), (-1.0, 1.0));
    }
}
