use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::spec::{sample_params, PriorSpec};
use crate::error::{Error, Result};
use crate::nn::{forward, NetworkSpec};
use crate::rng;

/// Outcome of comparing a scaled prior draw with the rescaled base draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingReport {
    /// Predicted output factor.
    pub factor: f64,
    /// Largest elementwise relative deviation `|f_scaled − factor·f_base| / |factor·f_base|`.
    pub max_relative_deviation: f64,
}

impl ScalingReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_relative_deviation <= tol
    }
}

const PROBE_INPUTS: usize = 32;

fn probe_inputs(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng::seeded(rng::substream(seed, 0x5ca1e));
    DMatrix::from_fn(PROBE_INPUTS, dim, |_, _| StandardNormal.sample(&mut rng))
}

fn relative_deviation(scaled: &DMatrix<f64>, base: &DMatrix<f64>, factor: f64) -> f64 {
    scaled
        .iter()
        .zip(base.iter())
        .map(|(&a, &b)| {
            let expected = factor * b;
            let diff = (a - expected).abs();
            if diff == 0.0 {
                0.0
            } else {
                diff / expected.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Draws one set of standard-normal weight noise, evaluates the network
/// under `base` and `scaled` priors with that shared noise, and measures how
/// far the scaled outputs are from `factor` times the base outputs.
pub fn verify_prior_rescaling(
    spec: &NetworkSpec,
    base: &PriorSpec,
    scaled: &PriorSpec,
    factor: f64,
    seed: u64,
) -> Result<ScalingReport> {
    let x = probe_inputs(spec.input_dim(), seed);
    let w_base = sample_params(spec, base, seed)?;
    let w_scaled = sample_params(spec, scaled, seed)?;
    let f_base = forward(spec, &w_base, &x)?;
    let f_scaled = forward(spec, &w_scaled, &x)?;
    Ok(ScalingReport {
        factor,
        max_relative_deviation: relative_deviation(&f_scaled, &f_base, factor),
    })
}

/// Bias-free networks: weight scales `α_i` only rescale outputs by `∏α_i`.
pub fn verify_output_scaling(
    spec: &NetworkSpec,
    weight_scales: &[f64],
    seed: u64,
) -> Result<ScalingReport> {
    if spec.has_any_bias() {
        return Err(Error::config("output scaling check requires a bias-free network"));
    }
    let n = spec.n_layers();
    if weight_scales.len() != n {
        return Err(Error::dim("weight scales", n, weight_scales.len()));
    }
    let base = PriorSpec::new(vec![1.0; n], vec![0.0; n])?;
    let scaled = PriorSpec::new(weight_scales.to_vec(), vec![0.0; n])?;
    let factor = weight_scales.iter().product();
    verify_prior_rescaling(spec, &base, &scaled, factor, seed)
}

/// `α_i = γ`, `β_i = γ^i` against the unit prior: outputs scale by `γⁿ`.
pub fn verify_geometric_scaling(spec: &NetworkSpec, gamma: f64, seed: u64) -> Result<ScalingReport> {
    let n = spec.n_layers();
    let bias = |s: f64| -> Vec<f64> {
        spec.use_bias()
            .iter()
            .enumerate()
            .map(|(i, &b)| if b { s.powi(i as i32 + 1) } else { 0.0 })
            .collect()
    };
    let base = PriorSpec::new(vec![1.0; n], bias(1.0))?;
    let scaled = PriorSpec::new(vec![gamma; n], bias(gamma))?;
    verify_prior_rescaling(spec, &base, &scaled, gamma.powi(n as i32), seed)
}
