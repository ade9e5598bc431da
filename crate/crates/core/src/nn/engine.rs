use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use super::likelihood::{LikelihoodKind, LikelihoodSpec, Temperature};
use super::params::ParamVector;
use super::spec::NetworkSpec;
use super::{Batch, Targets};
use crate::error::{Error, Result};
use crate::priors::{self, PriorSpec};

/// Activations recorded during a forward pass, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input to each weight layer; entry 0 is the network input.
    layer_inputs: Vec<DMatrix<f64>>,
    output: DMatrix<f64>,
}

impl ForwardTrace {
    pub fn output(&self) -> &DMatrix<f64> {
        &self.output
    }
}

fn check_inputs(spec: &NetworkSpec, params: &ParamVector, inputs: &DMatrix<f64>) -> Result<()> {
    params.check(spec)?;
    if inputs.ncols() != spec.input_dim() {
        return Err(Error::dim("network input", spec.input_dim(), inputs.ncols()));
    }
    Ok(())
}

fn affine(h: &DMatrix<f64>, values: &[f64], layer: &super::LayerLayout) -> DMatrix<f64> {
    let wt = DMatrixView::from_slice(&values[layer.weight_range()], layer.inputs, layer.outputs);
    let mut z = h * wt;
    if let Some(r) = layer.bias_range() {
        for (j, b) in values[r].iter().enumerate() {
            z.column_mut(j).add_scalar_mut(*b);
        }
    }
    z
}

/// Network outputs (logits or regression values), one row per input row.
pub fn forward(
    spec: &NetworkSpec,
    params: &ParamVector,
    inputs: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_inputs(spec, params, inputs)?;
    let layout = params.layout();
    let last = layout.layers().len() - 1;
    let mut h = affine(inputs, params.values(), &layout.layers()[0]);
    if last > 0 {
        h.apply(|v| *v = v.max(0.0));
    }
    for (l, layer) in layout.layers().iter().enumerate().skip(1) {
        h = affine(&h, params.values(), layer);
        if l < last {
            h.apply(|v| *v = v.max(0.0));
        }
    }
    Ok(h)
}

pub fn forward_trace(
    spec: &NetworkSpec,
    params: &ParamVector,
    inputs: &DMatrix<f64>,
) -> Result<ForwardTrace> {
    check_inputs(spec, params, inputs)?;
    let layout = params.layout();
    let last = layout.layers().len() - 1;
    let mut layer_inputs = Vec::with_capacity(layout.layers().len());
    let mut h = inputs.clone();
    for (l, layer) in layout.layers().iter().enumerate() {
        let mut z = affine(&h, params.values(), layer);
        if l < last {
            z.apply(|v| *v = v.max(0.0));
        }
        layer_inputs.push(h);
        h = z;
    }
    Ok(ForwardTrace {
        layer_inputs,
        output: h,
    })
}

/// Accumulates `∂(Σ d_output ⊙ f)/∂w` into `grad`.
pub fn backward(
    params: &ParamVector,
    trace: &ForwardTrace,
    d_output: DMatrix<f64>,
    grad: &mut [f64],
) {
    let values = params.values();
    let layers = params.layout().layers();
    let mut dz = d_output;
    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        let h = &trace.layer_inputs[l];
        {
            let mut gw =
                DMatrixViewMut::from_slice(&mut grad[layer.weight_range()], layer.inputs, layer.outputs);
            gw.gemm_tr(1.0, h, &dz, 1.0);
        }
        if let Some(r) = layer.bias_range() {
            for (j, g) in grad[r].iter_mut().enumerate() {
                *g += dz.column(j).sum();
            }
        }
        if l > 0 {
            let wt = DMatrixView::from_slice(&values[layer.weight_range()], layer.inputs, layer.outputs);
            let mut dh = &dz * wt.transpose();
            dh.zip_apply(h, |d, a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            dz = dh;
        }
    }
}

/// Adds `Σ_i (∂(d_i · f(x_i))/∂w)²` to `out`, where `d_i` is row `i` of
/// `d_output`: the per-example squared gradients summed over the batch.
pub fn backward_sq(
    params: &ParamVector,
    trace: &ForwardTrace,
    d_output: DMatrix<f64>,
    out: &mut [f64],
) {
    let values = params.values();
    let layers = params.layout().layers();
    let mut dz = d_output;
    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        let h = &trace.layer_inputs[l];
        let h2 = h.map(|v| v * v);
        let dz2 = dz.map(|v| v * v);
        {
            let mut gw =
                DMatrixViewMut::from_slice(&mut out[layer.weight_range()], layer.inputs, layer.outputs);
            gw.gemm_tr(1.0, &h2, &dz2, 1.0);
        }
        if let Some(r) = layer.bias_range() {
            for (j, g) in out[r].iter_mut().enumerate() {
                *g += dz2.column(j).sum();
            }
        }
        if l > 0 {
            let wt = DMatrixView::from_slice(&values[layer.weight_range()], layer.inputs, layer.outputs);
            let mut dh = &dz * wt.transpose();
            dh.zip_apply(h, |d, a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            dz = dh;
        }
    }
}

/// Per-row `−log p(y|f)` and its derivative with respect to the outputs.
pub(crate) fn output_nll(
    likelihood: &LikelihoodSpec,
    outputs: &DMatrix<f64>,
    targets: &Targets,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = outputs.nrows();
    if targets.len() != n {
        return Err(Error::dim("targets", n, targets.len()));
    }
    likelihood.check_output_dim(outputs.ncols())?;
    let mut nll = vec![0.0; n];
    let mut d = DMatrix::zeros(n, outputs.ncols());
    match (likelihood.kind(), targets) {
        (LikelihoodKind::GaussianRegression { noise_variance }, Targets::Real(y)) => {
            let log_norm = 0.5 * (2.0 * std::f64::consts::PI * noise_variance).ln();
            for i in 0..n {
                let r = outputs[(i, 0)] - y[i];
                nll[i] = log_norm + r * r / (2.0 * noise_variance);
                d[(i, 0)] = r / noise_variance;
            }
        }
        (LikelihoodKind::Categorical { classes }, Targets::Class(y)) => {
            for i in 0..n {
                if y[i] >= classes {
                    return Err(Error::config(format!(
                        "label {} out of range for {classes} classes",
                        y[i]
                    )));
                }
                let row = outputs.row(i);
                let max = row.max();
                let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
                let lse = max + sum.ln();
                nll[i] = lse - row[y[i]];
                for c in 0..classes {
                    d[(i, c)] = (row[c] - lse).exp();
                }
                d[(i, y[i])] -= 1.0;
            }
        }
        _ => {
            return Err(Error::config(
                "targets do not match the likelihood (regression vs classes)",
            ))
        }
    }
    Ok((nll, d))
}

/// Adds `scale · exponent · ∇(−log p(batch|w))` to `grad` and returns the
/// matching scaled data term.
pub fn data_term_and_grad(
    spec: &NetworkSpec,
    params: &ParamVector,
    batch: Batch<'_>,
    likelihood: &LikelihoodSpec,
    scale: f64,
    grad: &mut [f64],
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::config("empty batch"));
    }
    if grad.len() != params.len() {
        return Err(Error::dim("gradient buffer", params.len(), grad.len()));
    }
    let trace = forward_trace(spec, params, batch.inputs)?;
    let (nll, mut d) = output_nll(likelihood, &trace.output, batch.targets)?;
    let factor = likelihood.exponent() * scale;
    d *= factor;
    backward(params, &trace, d, grad);
    let value = factor * nll.iter().sum::<f64>();
    if !value.is_finite() {
        return Err(Error::numerical("non-finite data term"));
    }
    Ok(value)
}

/// Tempered negative log posterior `−(1/T)·log p(batch|w) − log p(w)`,
/// writing its gradient into `grad` (overwritten).
pub fn loss_and_grad_into(
    spec: &NetworkSpec,
    params: &ParamVector,
    batch: Batch<'_>,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    temperature: Temperature,
    grad: &mut [f64],
) -> Result<f64> {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let data = data_term_and_grad(spec, params, batch, likelihood, 1.0 / temperature.value(), grad)?;
    let prior_term = priors::neg_log_prior_and_grad(prior, params, grad)?;
    let loss = data + prior_term;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::numerical("non-finite loss or gradient"));
    }
    Ok(loss)
}

pub fn loss_and_grad(
    spec: &NetworkSpec,
    params: &ParamVector,
    batch: Batch<'_>,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    temperature: Temperature,
) -> Result<(f64, ParamVector)> {
    let mut grad = vec![0.0; params.len()];
    let loss = loss_and_grad_into(spec, params, batch, likelihood, prior, temperature, &mut grad)?;
    Ok((loss, params.with_values(grad)?))
}
