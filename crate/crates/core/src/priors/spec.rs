use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Layout, NetworkSpec, ParamVector};
use crate::rng;

/// Independent zero-mean Gaussians per layer: weights of layer `i` have
/// standard deviation `weight_scales[i]`, biases `bias_scales[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    weight_scales: Vec<f64>,
    bias_scales: Vec<f64>,
}

impl PriorSpec {
    pub fn new(weight_scales: Vec<f64>, bias_scales: Vec<f64>) -> Result<Self> {
        if weight_scales.len() != bias_scales.len() {
            return Err(Error::dim("prior layers", weight_scales.len(), bias_scales.len()));
        }
        if weight_scales.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::config("weight prior scales must be positive"));
        }
        if bias_scales.iter().any(|&b| !(b >= 0.0 && b.is_finite())) {
            return Err(Error::config("bias prior scales must be non-negative"));
        }
        Ok(PriorSpec {
            weight_scales,
            bias_scales,
        })
    }

    /// `p(w) = N(0, α²I)` over every weight and bias the network has.
    pub fn isotropic(spec: &NetworkSpec, alpha: f64) -> Result<Self> {
        let n = spec.n_layers();
        let bias = spec
            .use_bias()
            .iter()
            .map(|&b| if b { alpha } else { 0.0 })
            .collect();
        Self::new(vec![alpha; n], bias)
    }

    /// `α_i = γ`, `β_i = γ^i` for layers `i = 1..n`.
    pub fn geometric(n_layers: usize, gamma: f64) -> Result<Self> {
        let bias = (1..=n_layers).map(|i| gamma.powi(i as i32)).collect();
        Self::new(vec![gamma; n_layers], bias)
    }

    /// `α_i = γ·α̂_i`, `β_i = γ^i·β̂_i`.
    pub fn rescaled(&self, gamma: f64) -> Result<Self> {
        let w = self.weight_scales.iter().map(|a| gamma * a).collect();
        let b = self
            .bias_scales
            .iter()
            .enumerate()
            .map(|(i, b)| gamma.powi(i as i32 + 1) * b)
            .collect();
        Self::new(w, b)
    }

    /// All scales zero: a point mass at the origin. Only meaningful in tests.
    pub fn point_mass(n_layers: usize) -> Self {
        PriorSpec {
            weight_scales: vec![0.0; n_layers],
            bias_scales: vec![0.0; n_layers],
        }
    }

    pub fn weight_scales(&self) -> &[f64] {
        &self.weight_scales
    }

    pub fn bias_scales(&self) -> &[f64] {
        &self.bias_scales
    }

    pub fn n_layers(&self) -> usize {
        self.weight_scales.len()
    }

    pub fn check_layers(&self, layout: &Layout) -> Result<()> {
        if layout.layers().len() != self.n_layers() {
            return Err(Error::dim("prior layer count", layout.layers().len(), self.n_layers()));
        }
        Ok(())
    }

    /// Prior standard deviation of every coordinate of a vector with `layout`.
    pub fn coordinate_stds(&self, layout: &Layout) -> Result<Vec<f64>> {
        self.check_layers(layout)?;
        let mut out = vec![0.0; layout.len()];
        for (l, layer) in layout.layers().iter().enumerate() {
            out[layer.weight_range()].fill(self.weight_scales[l]);
            if let Some(r) = layer.bias_range() {
                out[r].fill(self.bias_scales[l]);
            }
        }
        Ok(out)
    }
}

/// Draws `w ~ p(w)`; the same seed always reuses the same standard-normal
/// noise, so samples under different scales differ only by the scales.
pub fn sample_params(spec: &NetworkSpec, prior: &PriorSpec, seed: u64) -> Result<ParamVector> {
    let layout = spec.layout();
    let stds = prior.coordinate_stds(&layout)?;
    let mut rng = rng::seeded(seed);
    let values = stds
        .iter()
        .map(|s| {
            let z: f64 = StandardNormal.sample(&mut rng);
            s * z
        })
        .collect();
    ParamVector::new(values, layout)
}

fn gaussian_terms(stds: &[f64], values: &[f64]) -> Result<(f64, Vec<f64>)> {
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut neg_log = 0.0;
    let mut grad = vec![0.0; values.len()];
    for (i, (&s, &w)) in stds.iter().zip(values).enumerate() {
        if s > 0.0 {
            neg_log += half_log_2pi + s.ln() + w * w / (2.0 * s * s);
            grad[i] = w / (s * s);
        } else if w != 0.0 {
            return Err(Error::config(format!(
                "coordinate {i} has zero prior scale but value {w}"
            )));
        }
    }
    Ok((neg_log, grad))
}

/// `log p(w)`, summed over layers. Zero-scale coordinates are point masses
/// and must be exactly zero.
pub fn log_prior_density(prior: &PriorSpec, params: &ParamVector) -> Result<f64> {
    let stds = prior.coordinate_stds(params.layout())?;
    Ok(-gaussian_terms(&stds, params.values())?.0)
}

/// Returns `−log p(w)` and adds its gradient to `grad`.
pub fn neg_log_prior_and_grad(
    prior: &PriorSpec,
    params: &ParamVector,
    grad: &mut [f64],
) -> Result<f64> {
    let stds = prior.coordinate_stds(params.layout())?;
    let (value, g) = gaussian_terms(&stds, params.values())?;
    grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_scales_give_zero_sample() {
        let spec = NetworkSpec::mlp(&[3, 4, 2]).unwrap();
        let w = sample_params(&spec, &PriorSpec::point_mass(2), 5).unwrap();
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sampling_is_seeded() {
        let spec = NetworkSpec::mlp(&[3, 4, 2]).unwrap();
        let prior = PriorSpec::isotropic(&spec, 0.7).unwrap();
        let a = sample_params(&spec, &prior, 11).unwrap();
        let b = sample_params(&spec, &prior, 11).unwrap();
        let c = sample_params(&spec, &prior, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_variance_matches_scale() {
        // One weight, many seeds: the Monte Carlo variance must sit within
        // three standard errors of α². For Gaussian data se(s²) ≈ α²·√(2/n).
        let spec = NetworkSpec::bias_free(&[1, 1]).unwrap();
        let alpha = 1.7;
        let prior = PriorSpec::isotropic(&spec, alpha).unwrap();
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|s| sample_params(&spec, &prior, s as u64).unwrap()[0])
            .collect();
        let var = draws.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let se = alpha * alpha * (2.0 / n as f64).sqrt();
        assert!((var - alpha * alpha).abs() < 3.0 * se, "var {var}");
    }

    #[test]
    fn density_at_origin() {
        let spec = NetworkSpec::mlp(&[2, 3, 1]).unwrap();
        let n = spec.count_params() as f64;
        let w = ParamVector::zeros(&spec);
        let unit = PriorSpec::isotropic(&spec, 1.0).unwrap();
        let lp = log_prior_density(&unit, &w).unwrap();
        assert!((lp + 0.5 * n * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);

        let doubled = PriorSpec::isotropic(&spec, 2.0).unwrap();
        let lp2 = log_prior_density(&doubled, &w).unwrap();
        assert!((lp - lp2 - n * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn density_matches_coordinate_sum() {
        let spec = NetworkSpec::new(vec![3, 5, 2], vec![true, false]).unwrap();
        let prior = PriorSpec::new(vec![0.5, 2.0], vec![0.3, 0.0]).unwrap();
        let w = sample_params(&spec, &prior, 3).unwrap();
        let layout = spec.layout();
        let mut oracle = 0.0;
        for i in 0..w.len() {
            let (l, is_bias) = layout.locate(i).unwrap();
            let s: f64 = if is_bias {
                prior.bias_scales()[l]
            } else {
                prior.weight_scales()[l]
            };
            let x = w[i];
            oracle += -(2.0 * std::f64::consts::PI * s * s).sqrt().ln() - x * x / (2.0 * s * s);
        }
        let lp = log_prior_density(&prior, &w).unwrap();
        assert!((lp - oracle).abs() < 1e-12);
    }

    #[test]
    fn clamped_bias_must_be_zero() {
        let spec = NetworkSpec::mlp(&[1, 1]).unwrap();
        let prior = PriorSpec::new(vec![1.0], vec![0.0]).unwrap();
        let w = ParamVector::from_spec(&spec, vec![0.3, 0.1]).unwrap();
        assert!(log_prior_density(&prior, &w).is_err());
        let w0 = ParamVector::from_spec(&spec, vec![0.3, 0.0]).unwrap();
        assert!(log_prior_density(&prior, &w0).is_ok());
    }

    #[test]
    fn layer_count_mismatch() {
        let spec = NetworkSpec::mlp(&[1, 2, 1]).unwrap();
        let prior = PriorSpec::new(vec![1.0], vec![1.0]).unwrap();
        assert!(sample_params(&spec, &prior, 0).is_err());
    }
}
