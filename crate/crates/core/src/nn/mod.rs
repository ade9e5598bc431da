//! Dense ReLU networks and tempered negative log posteriors.
//!
//! Parameters live in one flat [`ParamVector`]; each layer's weight matrix
//! is stored row-major (one row per output unit) followed by its bias
//! vector. Gradients are computed by reverse-mode accumulation through the
//! recorded forward trace.

mod engine;
mod likelihood;
mod params;
mod spec;

pub use engine::{
    backward, backward_sq, data_term_and_grad, forward, forward_trace, loss_and_grad, loss_and_grad_into,
    ForwardTrace,
};
pub(crate) use engine::output_nll;
pub use likelihood::{LikelihoodKind, LikelihoodSpec, Temperature};
pub use params::ParamVector;
pub use spec::{count_params, Activation, LayerLayout, Layout, NetworkSpec};

use nalgebra::DMatrix;

/// Regression targets or class labels.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Real(Vec<f64>),
    Class(Vec<usize>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Real(v) => v.len(),
            Targets::Class(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Targets at the given row indices, in order.
    pub fn select(&self, rows: &[usize]) -> Targets {
        match self {
            Targets::Real(v) => Targets::Real(rows.iter().map(|&i| v[i]).collect()),
            Targets::Class(v) => Targets::Class(rows.iter().map(|&i| v[i]).collect()),
        }
    }

    pub fn as_classes(&self) -> Option<&[usize]> {
        match self {
            Targets::Class(v) => Some(v),
            Targets::Real(_) => None,
        }
    }

    pub fn as_reals(&self) -> Option<&[f64]> {
        match self {
            Targets::Real(v) => Some(v),
            Targets::Class(_) => None,
        }
    }
}

/// A borrowed set of inputs (one example per row) and aligned targets.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub inputs: &'a DMatrix<f64>,
    pub targets: &'a Targets,
}

impl<'a> Batch<'a> {
    pub fn new(inputs: &'a DMatrix<f64>, targets: &'a Targets) -> Self {
        Batch { inputs, targets }
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }
}

/// Copies the selected rows of `x` into a new matrix.
pub fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |r, c| x[(rows[r], c)])
}
