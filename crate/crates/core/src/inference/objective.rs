use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::nn::{data_term_and_grad, select_rows, Batch, Layout, LikelihoodSpec, NetworkSpec, ParamVector, Targets, Temperature};
use crate::priors::PriorSpec;
use crate::rng;

/// An unnormalized log posterior over a flat parameter vector: a Gaussian
/// prior with independent coordinates plus an additive data term.
///
/// Every sampler and optimizer in this module is generic over this trait so
/// the same code drives network posteriors and analytic test targets.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// Number of data points; zero for prior-only targets.
    fn n_data(&self) -> usize;

    /// Adds `scale · ∇D(w; rows)` to `grad` and returns `scale · D(w; rows)`,
    /// where `D` is the (tempered) negative log likelihood of the selected
    /// rows, or of the full data set when `rows` is `None`.
    fn data_term(&self, w: &[f64], rows: Option<&[usize]>, scale: f64, grad: &mut [f64]) -> Result<f64>;

    /// Standard deviation of the zero-mean Gaussian prior per coordinate;
    /// zero marks a coordinate clamped at the origin.
    fn prior_stds(&self) -> &[f64];

    fn layout(&self) -> Layout {
        Layout::flat(self.dim())
    }
}

/// `−log p(w)` with its gradient added to `grad`.
pub fn neg_log_prior<O: Objective + ?Sized>(obj: &O, w: &[f64], grad: &mut [f64]) -> Result<f64> {
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut value = 0.0;
    for (i, (&s, &x)) in obj.prior_stds().iter().zip(w).enumerate() {
        if s > 0.0 {
            value += half_log_2pi + s.ln() + x * x / (2.0 * s * s);
            grad[i] += x / (s * s);
        } else if x != 0.0 {
            return Err(Error::config(format!("clamped coordinate {i} moved to {x}")));
        }
    }
    Ok(value)
}

/// Minibatch estimate of the negative log posterior; the data term is
/// rescaled by `n/|rows|`. `grad` is overwritten.
pub fn neg_log_posterior<O: Objective + ?Sized>(obj: &O, w: &[f64], rows: Option<&[usize]>, grad: &mut [f64]) -> Result<f64> {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let data = match rows {
        Some(r) if obj.n_data() > 0 && !r.is_empty() => {
            obj.data_term(w, Some(r), obj.n_data() as f64 / r.len() as f64, grad)?
        }
        Some(_) => 0.0,
        None if obj.n_data() > 0 => obj.data_term(w, None, 1.0, grad)?,
        None => 0.0,
    };
    let value = data + neg_log_prior(obj, w, grad)?;
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::numerical("non-finite negative log posterior"));
    }
    // clamped coordinates never move
    for (g, &s) in grad.iter_mut().zip(obj.prior_stds()) {
        if s == 0.0 {
            *g = 0.0;
        }
    }
    Ok(value)
}

/// Tempered network posterior
/// `p_T(w|D) ∝ p(D|w)^{1/T} p(w)` over a dataset.
#[derive(Debug, Clone)]
pub struct NetObjective<'a> {
    pub spec: &'a NetworkSpec,
    pub inputs: &'a DMatrix<f64>,
    pub targets: &'a Targets,
    pub likelihood: LikelihoodSpec,
    pub temperature: Temperature,
    prior_stds: Vec<f64>,
}

impl<'a> NetObjective<'a> {
    pub fn new(
        spec: &'a NetworkSpec,
        inputs: &'a DMatrix<f64>,
        targets: &'a Targets,
        likelihood: LikelihoodSpec,
        prior: &PriorSpec,
        temperature: Temperature,
    ) -> Result<Self> {
        likelihood.check_output_dim(spec.output_dim())?;
        if inputs.ncols() != spec.input_dim() {
            return Err(Error::dim("network input", spec.input_dim(), inputs.ncols()));
        }
        if targets.len() != inputs.nrows() {
            return Err(Error::dim("targets", inputs.nrows(), targets.len()));
        }
        let prior_stds = prior.coordinate_stds(&spec.layout())?;
        Ok(NetObjective {
            spec,
            inputs,
            targets,
            likelihood,
            temperature,
            prior_stds,
        })
    }

    pub fn params(&self, values: Vec<f64>) -> Result<ParamVector> {
        ParamVector::from_spec(self.spec, values)
    }
}

impl Objective for NetObjective<'_> {
    fn dim(&self) -> usize {
        self.prior_stds.len()
    }

    fn n_data(&self) -> usize {
        self.inputs.nrows()
    }

    fn data_term(&self, w: &[f64], rows: Option<&[usize]>, scale: f64, grad: &mut [f64]) -> Result<f64> {
        let params = ParamVector::from_spec(self.spec, w.to_vec())?;
        let factor = scale / self.temperature.value();
        match rows {
            None => data_term_and_grad(self.spec, &params, Batch::new(self.inputs, self.targets), &self.likelihood, factor, grad),
            Some(r) => {
                let x = select_rows(self.inputs, r);
                let y = self.targets.select(r);
                data_term_and_grad(self.spec, &params, Batch::new(&x, &y), &self.likelihood, factor, grad)
            }
        }
    }

    fn prior_stds(&self) -> &[f64] {
        &self.prior_stds
    }

    fn layout(&self) -> Layout {
        self.spec.layout()
    }
}

/// A data-free Gaussian target `N(0, diag(stds²))`.
#[derive(Debug, Clone)]
pub struct PriorOnly {
    stds: Vec<f64>,
}

impl PriorOnly {
    pub fn new(stds: Vec<f64>) -> Self {
        PriorOnly { stds }
    }

    pub fn standard(dim: usize) -> Self {
        PriorOnly { stds: vec![1.0; dim] }
    }
}

impl Objective for PriorOnly {
    fn dim(&self) -> usize {
        self.stds.len()
    }

    fn n_data(&self) -> usize {
        0
    }

    fn data_term(&self, _w: &[f64], _rows: Option<&[usize]>, _scale: f64, _grad: &mut [f64]) -> Result<f64> {
        Ok(0.0)
    }

    fn prior_stds(&self) -> &[f64] {
        &self.stds
    }
}

/// He-style initialization: weights `N(0, 2/fan_in)`, biases zero.
pub fn he_init(spec: &NetworkSpec, seed: u64) -> ParamVector {
    let mut params = ParamVector::zeros(spec);
    let mut rng = rng::seeded(seed);
    let layers = params.layout().layers().to_vec();
    for layer in layers {
        let normal = Normal::new(0.0, (2.0 / layer.inputs as f64).sqrt()).expect("positive std");
        for i in layer.weight_range() {
            params[i] = normal.sample(&mut rng);
        }
    }
    params
}
