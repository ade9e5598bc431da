use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{backward_sq, forward_trace, output_nll, LikelihoodKind, LikelihoodSpec, NetworkSpec, ParamVector};
use crate::priors::{log_prior_density, PriorSpec};

/// Diagonal curvature surrogate for the Laplace evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Curvature {
    /// `E_{y~p(y|x,ŵ)}[(∇ log p(y|x,ŵ))²]` summed over examples; equals the
    /// Gauss–Newton diagonal and is exact for linear-Gaussian models.
    #[default]
    ExpectedFisher,
    /// Squared per-example gradients at the observed labels.
    EmpiricalFisher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    pub log_marginal: f64,
    pub log_likelihood: f64,
    pub log_prior: f64,
    /// `(d/2)·log 2π − ½ Σ log h_i`.
    pub occam: f64,
    /// Number of curvature entries that hit the floor.
    pub floored: usize,
}

pub const CURVATURE_FLOOR: f64 = 1e-10;

/// Diagonal of the Fisher (expected or empirical) of the full-data log
/// likelihood at `params`, without the prior term.
pub fn fisher_diagonal(
    spec: &NetworkSpec,
    params: &ParamVector,
    data: &Dataset,
    likelihood: &LikelihoodSpec,
    curvature: Curvature,
) -> Result<Vec<f64>> {
    likelihood.check_output_dim(spec.output_dim())?;
    let trace = forward_trace(spec, params, &data.inputs)?;
    let f = trace.output();
    let n = f.nrows();
    let mut h = vec![0.0; params.len()];
    match curvature {
        Curvature::EmpiricalFisher => {
            let (_, d) = output_nll(likelihood, f, &data.targets)?;
            backward_sq(params, &trace, d, &mut h);
        }
        Curvature::ExpectedFisher => match likelihood.kind() {
            LikelihoodKind::GaussianRegression { noise_variance } => {
                let d = DMatrix::from_element(n, 1, 1.0 / noise_variance.sqrt());
                backward_sq(params, &trace, d, &mut h);
            }
            LikelihoodKind::Categorical { classes } => {
                let probs: Vec<Vec<f64>> = f.row_iter().map(|r| crate::metrics::softmax_row(r.iter().copied())).collect();
                for c in 0..classes {
                    let mut d = DMatrix::zeros(n, classes);
                    for i in 0..n {
                        let w = probs[i][c].sqrt();
                        for k in 0..classes {
                            let indicator = if k == c { 1.0 } else { 0.0 };
                            d[(i, k)] = w * (probs[i][k] - indicator);
                        }
                    }
                    backward_sq(params, &trace, d, &mut h);
                }
            }
        },
    }
    let e2 = likelihood.exponent() * likelihood.exponent();
    let e = likelihood.exponent();
    // a likelihood raised to power e has log-gradients scaled by e; the
    // expected Fisher scales by e, the empirical one by e²
    let factor = match curvature {
        Curvature::ExpectedFisher => e,
        Curvature::EmpiricalFisher => e2,
    };
    h.iter_mut().for_each(|v| *v *= factor);
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite curvature"));
    }
    Ok(h)
}

/// Diagonal Laplace estimate of `log p(D)` around a trained mode:
/// `log p(D|ŵ) + log p(ŵ) + (d/2)·log 2π − ½ Σ log h_i` with
/// `h = Fisher diagonal + prior precision`, floored at [`CURVATURE_FLOOR`].
/// Coordinates with a zero prior scale are fixed and excluded.
pub fn laplace_log_marginal(
    spec: &NetworkSpec,
    map_params: &ParamVector,
    data: &Dataset,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    curvature: Curvature,
) -> Result<LaplaceEstimate> {
    map_params.check(spec)?;
    let fisher = fisher_diagonal(spec, map_params, data, likelihood, curvature)?;
    let stds = prior.coordinate_stds(map_params.layout())?;
    let trace = forward_trace(spec, map_params, &data.inputs)?;
    let (nll, _) = output_nll(likelihood, trace.output(), &data.targets)?;
    let log_likelihood = -likelihood.exponent() * nll.iter().sum::<f64>();
    let log_prior = log_prior_density(prior, map_params)?;
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut occam = 0.0;
    let mut floored = 0;
    for (f, s) in fisher.iter().zip(&stds) {
        if *s == 0.0 {
            continue;
        }
        let mut h = f + 1.0 / (s * s);
        if h < CURVATURE_FLOOR {
            h = CURVATURE_FLOOR;
            floored += 1;
        }
        occam += half_log_2pi - 0.5 * h.ln();
    }
    let log_marginal = log_likelihood + log_prior + occam;
    if !log_marginal.is_finite() {
        return Err(Error::numerical("non-finite Laplace evidence"));
    }
    Ok(LaplaceEstimate {
        log_marginal,
        log_likelihood,
        log_prior,
        occam,
        floored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Provenance, Split};
    use crate::nn::Targets;

    fn linear_1d() -> NetworkSpec {
        NetworkSpec::bias_free(&[1, 1]).unwrap()
    }

    #[test]
    fn single_point_hand_formula() {
        // y = w·x + ε, x = 2, y = 1, σ² = 0.5, prior N(0, 1)
        let (x, y, s2, a2) = (2.0, 1.0, 0.5, 1.0);
        let w_hat = x * y / s2 / (x * x / s2 + 1.0 / a2);
        let data = Dataset::regression(DMatrix::from_element(1, 1, x), vec![y], Split::Train, Provenance::default()).unwrap();
        let spec = linear_1d();
        let lik = LikelihoodSpec::gaussian(s2).unwrap();
        let prior = PriorSpec::new(vec![1.0], vec![0.0]).unwrap();
        let est = laplace_log_marginal(&spec, &ParamVector::from_spec(&spec, vec![w_hat]).unwrap(), &data, &lik, &prior, Curvature::ExpectedFisher).unwrap();
        let r = y - w_hat * x;
        let ll = -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - r * r / (2.0 * s2);
        let lp = -0.5 * (2.0 * std::f64::consts::PI * a2).ln() - w_hat * w_hat / (2.0 * a2);
        let h = x * x / s2 + 1.0 / a2;
        let hand = ll + lp + 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * h.ln();
        assert!((est.log_marginal - hand).abs() < 1e-12);
        // closed form: y ~ N(0, σ² + α²x²)
        let v = s2 + a2 * x * x;
        let exact = -0.5 * (2.0 * std::f64::consts::PI * v).ln() - y * y / (2.0 * v);
        assert!((est.log_marginal - exact).abs() < 1e-10);
    }

    #[test]
    fn empirical_fisher_single_point() {
        let data = Dataset::regression(DMatrix::from_element(1, 1, 1.0), vec![3.0], Split::Train, Provenance::default()).unwrap();
        let spec = linear_1d();
        let lik = LikelihoodSpec::gaussian(1.0).unwrap();
        let h = fisher_diagonal(&spec, &ParamVector::from_spec(&spec, vec![1.0]).unwrap(), &data, &lik, Curvature::EmpiricalFisher).unwrap();
        // gradient of ½(w−3)² at w=1 is −2
        assert!((h[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn categorical_expected_fisher_matches_loop() {
        let spec = NetworkSpec::mlp(&[2, 3, 3]).unwrap();
        let params = crate::priors::sample_params(&spec, &PriorSpec::isotropic(&spec, 1.0).unwrap(), 4).unwrap();
        let x = DMatrix::from_row_slice(2, 2, &[0.3, -1.0, 1.2, 0.4]);
        let data = Dataset::classification(x.clone(), vec![0, 2], 3, Split::Train, Provenance::default()).unwrap();
        let lik = LikelihoodSpec::categorical(3).unwrap();
        let h = fisher_diagonal(&spec, &params, &data, &lik, Curvature::ExpectedFisher).unwrap();
        let mut oracle = vec![0.0; params.len()];
        for i in 0..2 {
            let xi = x.rows(i, 1).into_owned();
            let f = crate::nn::forward(&spec, &params, &xi).unwrap();
            let p = crate::metrics::softmax_row(f.row(0).iter().copied());
            for c in 0..3 {
                let mut g = vec![0.0; params.len()];
                crate::nn::data_term_and_grad(&spec, &params, crate::nn::Batch::new(&xi, &Targets::Class(vec![c])), &lik, 1.0, &mut g).unwrap();
                for k in 0..g.len() {
                    oracle[k] += p[c] * g[k] * g[k];
                }
            }
        }
        for (a, b) in h.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }
}
