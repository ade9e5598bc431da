use nalgebra::DMatrix;
use rayon::prelude::*;

use super::spec::{sample_params, PriorSpec};
use crate::error::{Error, Result};
use crate::metrics::softmax_row;
use crate::nn::{forward, NetworkSpec};
use crate::rng;

/// Class probabilities implied by prior weight draws.
#[derive(Debug, Clone)]
pub struct PriorPredictive {
    /// For each weight sample, softmax outputs averaged over the dataset.
    pub per_sample: Vec<Vec<f64>>,
    /// Average of `per_sample`: the prior predictive class distribution.
    pub average: Vec<f64>,
}

pub fn prior_predictive_summary(
    spec: &NetworkSpec,
    prior: &PriorSpec,
    inputs: &DMatrix<f64>,
    samples: usize,
    seed: u64,
) -> Result<PriorPredictive> {
    if samples == 0 || inputs.nrows() == 0 {
        return Err(Error::config("need at least one sample and one input"));
    }
    let classes = spec.output_dim();
    if classes < 2 {
        return Err(Error::config("prior predictive summary needs a categorical output"));
    }
    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let w = sample_params(spec, prior, rng::member_seed(seed, s))?;
            let logits = forward(spec, &w, inputs)?;
            let mut mean = vec![0.0; classes];
            for row in logits.row_iter() {
                let p = softmax_row(row.iter().copied());
                mean.iter_mut().zip(p).for_each(|(m, q)| *m += q);
            }
            let n = inputs.nrows() as f64;
            mean.iter_mut().for_each(|m| *m /= n);
            Ok(mean)
        })
        .collect::<Result<_>>()?;
    let mut average = vec![0.0; classes];
    for p in &per_sample {
        average.iter_mut().zip(p).for_each(|(a, q)| *a += q);
    }
    average.iter_mut().for_each(|a| *a /= samples as f64);
    Ok(PriorPredictive {
        per_sample,
        average,
    })
}
