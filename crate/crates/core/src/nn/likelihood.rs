use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LikelihoodKind {
    /// `y ~ N(f(x;w), noise_variance)` with a scalar output.
    GaussianRegression { noise_variance: f64 },
    /// `y ~ Categorical(softmax(f(x;w)))`.
    Categorical { classes: usize },
}

/// Observation model `p(y|f)`, optionally raised to a power.
///
/// The exponent turns `p` into the modified likelihood `p^exponent` whose
/// untempered posterior equals the temperature `1/exponent` posterior of
/// the original model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodSpec {
    kind: LikelihoodKind,
    exponent: f64,
}

impl LikelihoodSpec {
    pub fn gaussian(noise_variance: f64) -> Result<Self> {
        if !(noise_variance > 0.0 && noise_variance.is_finite()) {
            return Err(Error::config("noise variance must be positive"));
        }
        Ok(LikelihoodSpec {
            kind: LikelihoodKind::GaussianRegression { noise_variance },
            exponent: 1.0,
        })
    }

    pub fn categorical(classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::config("categorical likelihood needs >= 2 classes"));
        }
        Ok(LikelihoodSpec {
            kind: LikelihoodKind::Categorical { classes },
            exponent: 1.0,
        })
    }

    pub fn kind(&self) -> LikelihoodKind {
        self.kind
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// `p^exponent`.
    pub fn powered(self, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::config("likelihood exponent must be positive"));
        }
        Ok(LikelihoodSpec { exponent, ..self })
    }

    /// The likelihood `p^{1/T}` whose untempered posterior is the
    /// temperature-`T` posterior under `self`.
    pub fn tempered_equivalent(self, temperature: Temperature) -> Self {
        LikelihoodSpec {
            exponent: self.exponent / temperature.value(),
            ..self
        }
    }

    pub fn output_dim(&self) -> usize {
        match self.kind {
            LikelihoodKind::GaussianRegression { .. } => 1,
            LikelihoodKind::Categorical { classes } => classes,
        }
    }

    pub fn noise_variance(&self) -> Option<f64> {
        match self.kind {
            LikelihoodKind::GaussianRegression { noise_variance } => Some(noise_variance),
            LikelihoodKind::Categorical { .. } => None,
        }
    }

    pub fn classes(&self) -> Option<usize> {
        match self.kind {
            LikelihoodKind::Categorical { classes } => Some(classes),
            LikelihoodKind::GaussianRegression { .. } => None,
        }
    }

    pub fn is_regression(&self) -> bool {
        matches!(self.kind, LikelihoodKind::GaussianRegression { .. })
    }

    pub fn check_output_dim(&self, out: usize) -> Result<()> {
        if out != self.output_dim() {
            return Err(Error::dim("likelihood output dimension", self.output_dim(), out));
        }
        Ok(())
    }

    /// Untempered, unpowered `−log p(y|f)` for a regression output.
    pub fn gaussian_nll(noise_variance: f64, f: f64, y: f64) -> f64 {
        let r = f - y;
        0.5 * (2.0 * std::f64::consts::PI * noise_variance).ln() + r * r / (2.0 * noise_variance)
    }
}

/// Posterior temperature `T > 0`; `T = 1` is the standard posterior.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Temperature(f64);

impl Temperature {
    pub const ONE: Temperature = Temperature(1.0);

    pub fn new(t: f64) -> Result<Self> {
        if t > 0.0 && t.is_finite() {
            Ok(Temperature(t))
        } else {
            Err(Error::config(format!("temperature must be positive, got {t}")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl Default for Temperature {
    fn default() -> Self {
        Temperature::ONE
    }
}
