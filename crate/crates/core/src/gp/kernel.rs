use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `k(x, x') = s²·exp(−‖x/c − x'/c‖² / 2ℓ²)` with input-scale divisor `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfKernel {
    pub lengthscale: f64,
    pub signal_var: f64,
    pub input_scale: f64,
}

impl RbfKernel {
    pub fn new(lengthscale: f64, signal_var: f64) -> Result<Self> {
        Self::with_input_scale(lengthscale, signal_var, 1.0)
    }

    pub fn with_input_scale(lengthscale: f64, signal_var: f64, input_scale: f64) -> Result<Self> {
        for (name, v) in [("lengthscale", lengthscale), ("signal variance", signal_var), ("input scale", input_scale)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("RBF {name} must be positive, got {v}")));
            }
        }
        Ok(RbfKernel {
            lengthscale,
            signal_var,
            input_scale,
        })
    }

    pub fn with_lengthscale(&self, lengthscale: f64) -> Result<Self> {
        Self::with_input_scale(lengthscale, self.signal_var, self.input_scale)
    }

    /// Squared distance between two rows after input scaling.
    pub(crate) fn scaled_sq_dist(&self, a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
        let c2 = self.input_scale * self.input_scale;
        a.row(i).iter().zip(b.row(j).iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / c2
    }

    pub fn eval_sq_dist(&self, r2: f64) -> f64 {
        self.signal_var * (-r2 / (2.0 * self.lengthscale * self.lengthscale)).exp()
    }
}

pub fn kernel_matrix(k: &RbfKernel, x: &DMatrix<f64>, x2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != x2.ncols() {
        return Err(Error::dim("kernel inputs", x.ncols(), x2.ncols()));
    }
    let symmetric = std::ptr::eq(x, x2);
    let mut out = DMatrix::zeros(x.nrows(), x2.nrows());
    for i in 0..x.nrows() {
        let start = if symmetric { i } else { 0 };
        for j in start..x2.nrows() {
            let v = k.eval_sq_dist(k.scaled_sq_dist(x, i, x2, j));
            out[(i, j)] = v;
            if symmetric {
                out[(j, i)] = v;
            }
        }
    }
    Ok(out)
}

/// Median Euclidean distance over distinct row pairs.
pub fn median_pairwise_distance(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::config("median distance needs at least two inputs"));
    }
    let unit = RbfKernel::new(1.0, 1.0)?;
    let mut d: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| unit.scaled_sq_dist(x, i, x, j).sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let median = if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) };
    if median <= 0.0 {
        return Err(Error::Degenerate("inputs are mostly identical".into()));
    }
    Ok(median)
}
