use nalgebra::DMatrix;
use rayon::prelude::*;

use super::softmax_row;
use crate::error::{Error, Result};
use crate::inference::PosteriorApprox;
use crate::nn::{forward, LikelihoodKind, LikelihoodSpec, NetworkSpec, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictiveKind {
    /// Samples are `f(x; w_j)`; each stands for `N(f, noise_variance)`.
    Regression { noise_variance: f64 },
    /// Samples are softmax probability vectors.
    Classification { classes: usize },
}

/// `J` sampled predictive outputs at each test input.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSamples {
    pub inputs: DMatrix<f64>,
    pub kind: PredictiveKind,
    /// Which posterior produced the draws.
    pub tag: String,
    draws: usize,
    /// `values[(i·J + j)·width + c]`.
    values: Vec<f64>,
}

impl PredictiveSamples {
    fn width(kind: PredictiveKind) -> usize {
        match kind {
            PredictiveKind::Regression { .. } => 1,
            PredictiveKind::Classification { classes } => classes,
        }
    }

    /// `outputs[j]` holds draw `j`'s outputs (`inputs × width`), already
    /// mapped to probabilities for classification.
    pub fn from_draws(inputs: DMatrix<f64>, kind: PredictiveKind, outputs: &[DMatrix<f64>], tag: impl Into<String>) -> Result<Self> {
        let draws = outputs.len();
        if draws == 0 {
            return Err(Error::config("no predictive draws"));
        }
        let (n, width) = (inputs.nrows(), Self::width(kind));
        let mut values = vec![0.0; n * draws * width];
        for (j, out) in outputs.iter().enumerate() {
            if out.shape() != (n, width) {
                return Err(Error::dim("predictive draw", n * width, out.len()));
            }
            for i in 0..n {
                for c in 0..width {
                    values[(i * draws + j) * width + c] = out[(i, c)];
                }
            }
        }
        let pred = PredictiveSamples {
            inputs,
            kind,
            tag: tag.into(),
            draws,
            values,
        };
        if let PredictiveKind::Classification { .. } = kind {
            for i in 0..n {
                for j in 0..draws {
                    let s: f64 = pred.probs(i, j).iter().sum();
                    if (s - 1.0).abs() > 1e-9 {
                        return Err(Error::Format(format!("probabilities at input {i}, draw {j} sum to {s}")));
                    }
                }
            }
        }
        Ok(pred)
    }

    /// Evaluates each parameter draw on `inputs`.
    pub fn from_params(
        spec: &NetworkSpec,
        params: &[ParamVector],
        inputs: &DMatrix<f64>,
        likelihood: &LikelihoodSpec,
        tag: impl Into<String>,
    ) -> Result<Self> {
        let kind = match likelihood.kind() {
            LikelihoodKind::GaussianRegression { noise_variance } => PredictiveKind::Regression { noise_variance },
            LikelihoodKind::Categorical { classes } => PredictiveKind::Classification { classes },
        };
        likelihood.check_output_dim(spec.output_dim())?;
        let outputs: Vec<DMatrix<f64>> = params
            .par_iter()
            .map(|w| {
                let f = forward(spec, w, inputs)?;
                Ok(match kind {
                    PredictiveKind::Regression { .. } => f,
                    PredictiveKind::Classification { classes } => {
                        let mut p = DMatrix::zeros(f.nrows(), classes);
                        for (i, row) in f.row_iter().enumerate() {
                            for (c, v) in softmax_row(row.iter().copied()).into_iter().enumerate() {
                                p[(i, c)] = v;
                            }
                        }
                        p
                    }
                })
            })
            .collect::<Result<_>>()?;
        Self::from_draws(inputs.clone(), kind, &outputs, tag)
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    /// The `J` sampled function values at regression input `i`.
    pub fn regression_samples(&self, i: usize) -> &[f64] {
        &self.values[i * self.draws..(i + 1) * self.draws]
    }

    pub fn noise_variance(&self) -> Option<f64> {
        match self.kind {
            PredictiveKind::Regression { noise_variance } => Some(noise_variance),
            PredictiveKind::Classification { .. } => None,
        }
    }

    pub fn classes(&self) -> Option<usize> {
        match self.kind {
            PredictiveKind::Classification { classes } => Some(classes),
            PredictiveKind::Regression { .. } => None,
        }
    }

    /// Class probabilities of draw `j` at input `i`.
    pub fn probs(&self, i: usize, j: usize) -> &[f64] {
        let w = Self::width(self.kind);
        let at = (i * self.draws + j) * w;
        &self.values[at..at + w]
    }

    /// Probability-space average over draws at input `i`.
    pub fn mean_probs(&self, i: usize) -> Vec<f64> {
        let w = Self::width(self.kind);
        let mut out = vec![0.0; w];
        for j in 0..self.draws {
            out.iter_mut().zip(self.probs(i, j)).for_each(|(o, p)| *o += p);
        }
        out.iter_mut().for_each(|o| *o /= self.draws as f64);
        out
    }

    /// Per-input mean of the sampled outputs (regression) or mean
    /// probability vectors (classification), as an `inputs × width` matrix.
    pub fn mean(&self) -> DMatrix<f64> {
        let w = Self::width(self.kind);
        let mut m = DMatrix::zeros(self.n_inputs(), w);
        for i in 0..self.n_inputs() {
            for (c, v) in self.mean_probs(i).into_iter().enumerate() {
                m[(i, c)] = v;
            }
        }
        m
    }

    /// The first `count` draws only.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        self.select_draws(&(0..count).collect::<Vec<_>>())
    }

    pub fn select_draws(&self, draws: &[usize]) -> Result<Self> {
        if draws.is_empty() || draws.iter().any(|&j| j >= self.draws) {
            return Err(Error::config("invalid draw selection"));
        }
        let w = Self::width(self.kind);
        let mut values = Vec::with_capacity(self.n_inputs() * draws.len() * w);
        for i in 0..self.n_inputs() {
            for &j in draws {
                let at = (i * self.draws + j) * w;
                values.extend_from_slice(&self.values[at..at + w]);
            }
        }
        Ok(PredictiveSamples {
            inputs: self.inputs.clone(),
            kind: self.kind,
            tag: self.tag.clone(),
            draws: draws.len(),
            values,
        })
    }
}

/// Simple Monte Carlo over `posterior`: draws `J` parameter vectors (all
/// members, unresampled, for a Dirac ensemble) and evaluates `p(y|x,w_j)`.
pub fn predictive_samples(
    spec: &NetworkSpec,
    posterior: &PosteriorApprox,
    test_inputs: &DMatrix<f64>,
    draws: usize,
    seed: u64,
    likelihood: &LikelihoodSpec,
) -> Result<PredictiveSamples> {
    let params = posterior.draw(draws, seed)?;
    PredictiveSamples::from_params(spec, &params, test_inputs, likelihood, posterior.tag())
}
