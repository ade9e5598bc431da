//! The Monte Carlo Bayesian model average and its evaluation metrics.
//!
//! Predictive distributions are mixtures in probability space:
//! `p(y|x,D) ≈ (1/J) Σ_j p(y|x,w_j)`.

mod band;
mod predictive;
mod records;
mod scores;
mod wasserstein;

pub use band::{predictive_band, Band, BandMode};
pub use predictive::{predictive_samples, PredictiveKind, PredictiveSamples};
pub use records::{w1_curve_csv, MetricRecord};
pub use scores::{accuracy, ece, nll, NllScore};
pub use wasserstein::{wasserstein1, wasserstein1_predictive, W1Report};

/// Numerically stable softmax of one logit row.
pub fn softmax_row(logits: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let max = logits.clone().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `log Σ exp(v)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
