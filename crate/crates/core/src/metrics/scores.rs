use super::predictive::{PredictiveKind, PredictiveSamples};
use super::{argmax, log_sum_exp};
use crate::error::{Error, Result};
use crate::nn::Targets;

/// Mean negative log predictive density, with the number of test points
/// whose predictive mass fell below the clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NllScore {
    pub value: f64,
    pub clamped: usize,
}

const MASS_FLOOR: f64 = 1e-12;

/// `mean_i −log[(1/J) Σ_j p(y_i|x_i,w_j)]`.
pub fn nll(pred: &PredictiveSamples, targets: &Targets) -> Result<NllScore> {
    let n = pred.n_inputs();
    if targets.len() != n {
        return Err(Error::dim("nll targets", n, targets.len()));
    }
    let j = pred.draws() as f64;
    let mut total = 0.0;
    let mut clamped = 0;
    match (pred.kind, targets) {
        (PredictiveKind::Regression { noise_variance }, Targets::Real(y)) => {
            let log_norm = -0.5 * (2.0 * std::f64::consts::PI * noise_variance).ln();
            let mut terms = vec![0.0; pred.draws()];
            for i in 0..n {
                for (t, f) in terms.iter_mut().zip(pred.regression_samples(i)) {
                    let r = y[i] - f;
                    *t = log_norm - r * r / (2.0 * noise_variance);
                }
                let log_p = log_sum_exp(&terms) - j.ln();
                let log_p = if log_p < MASS_FLOOR.ln() {
                    clamped += 1;
                    MASS_FLOOR.ln()
                } else {
                    log_p
                };
                total -= log_p;
            }
        }
        (PredictiveKind::Classification { classes }, Targets::Class(y)) => {
            for i in 0..n {
                if y[i] >= classes {
                    return Err(Error::config(format!("label {} out of range", y[i])));
                }
                let p = pred.mean_probs(i)[y[i]];
                let p = if p < MASS_FLOOR {
                    clamped += 1;
                    MASS_FLOOR
                } else {
                    p
                };
                total -= p.ln();
            }
        }
        _ => return Err(Error::config("targets do not match predictive kind")),
    }
    Ok(NllScore {
        value: total / n as f64,
        clamped,
    })
}

fn labels<'a>(pred: &PredictiveSamples, targets: &'a Targets) -> Result<&'a [usize]> {
    if pred.classes().is_none() {
        return Err(Error::config("metric needs a classification predictive"));
    }
    let y = targets
        .as_classes()
        .ok_or_else(|| Error::config("metric needs class labels"))?;
    if y.len() != pred.n_inputs() {
        return Err(Error::dim("labels", pred.n_inputs(), y.len()));
    }
    Ok(y)
}

/// Fraction of inputs whose mean predictive argmax equals the label.
pub fn accuracy(pred: &PredictiveSamples, targets: &Targets) -> Result<f64> {
    let y = labels(pred, targets)?;
    let hits = (0..y.len()).filter(|&i| argmax(&pred.mean_probs(i)) == y[i]).count();
    Ok(hits as f64 / y.len() as f64)
}

/// Expected calibration error over `n_bins` equal-width confidence bins.
pub fn ece(pred: &PredictiveSamples, targets: &Targets, n_bins: usize) -> Result<f64> {
    if n_bins == 0 {
        return Err(Error::config("ece needs at least one bin"));
    }
    let y = labels(pred, targets)?;
    let mut count = vec![0usize; n_bins];
    let mut correct = vec![0.0; n_bins];
    let mut confidence = vec![0.0; n_bins];
    for i in 0..y.len() {
        let p = pred.mean_probs(i);
        let k = argmax(&p);
        let conf = p[k];
        let b = ((conf * n_bins as f64) as usize).min(n_bins - 1);
        count[b] += 1;
        confidence[b] += conf;
        if k == y[i] {
            correct[b] += 1.0;
        }
    }
    let n = y.len() as f64;
    Ok((0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let c = count[b] as f64;
            (c / n) * (correct[b] / c - confidence[b] / c).abs()
        })
        .sum())
}
