use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_distr::{Distribution, StandardNormal};

use super::kernel::{kernel_matrix, RbfKernel};
use crate::error::{Error, Result};
use crate::rng;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Cholesky of `K + (noise + j)·I`, escalating the jitter `j` from
/// `1e-10·s²` by factors of 10 up to `1e-4·s²` (from `j = 0` when
/// `noise > 0`). Returns the factor and `j`.
pub(crate) fn cholesky_with_jitter(k: &DMatrix<f64>, noise: f64, signal_var: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut jitter = if noise > 0.0 { 0.0 } else { JITTER_START * signal_var };
    while jitter <= JITTER_MAX * signal_var * (1.0 + 1e-9) {
        let mut a = k.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += noise + jitter;
        }
        if let Some(c) = Cholesky::new(a) {
            if c.l_dirty().diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) {
                return Ok((c, jitter));
            }
        }
        jitter = if jitter == 0.0 { JITTER_START * signal_var } else { jitter * 10.0 };
    }
    Err(Error::numerical("kernel matrix is not positive definite even with maximal jitter"))
}

/// Exact GP regression with zero mean and an RBF kernel.
#[derive(Debug, Clone)]
pub struct GpRegressor {
    pub kernel: RbfKernel,
    pub inputs: DMatrix<f64>,
    pub targets: DVector<f64>,
    pub noise_var: f64,
    /// Diagonal jitter added on top of `noise_var` to factorize.
    pub jitter: f64,
    chol: Cholesky<f64, Dyn>,
    /// `(K + σ²I)⁻¹ y`.
    alpha: DVector<f64>,
}

impl GpRegressor {
    /// `noise_var + jitter`, the diagonal actually added to `K`.
    pub fn effective_noise(&self) -> f64 {
        self.noise_var + self.jitter
    }

    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }
}

pub fn gp_fit(x: &DMatrix<f64>, y: &[f64], kernel: &RbfKernel, noise_var: f64) -> Result<GpRegressor> {
    if x.nrows() == 0 {
        return Err(Error::config("GP needs at least one training point"));
    }
    if y.len() != x.nrows() {
        return Err(Error::dim("GP targets", x.nrows(), y.len()));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::config("noise variance must be non-negative"));
    }
    let k = kernel_matrix(kernel, x, x)?;
    let (chol, jitter) = cholesky_with_jitter(&k, noise_var, kernel.signal_var)?;
    let targets = DVector::from_column_slice(y);
    let alpha = chol.solve(&targets);
    Ok(GpRegressor {
        kernel: *kernel,
        inputs: x.clone(),
        targets,
        noise_var,
        jitter,
        chol,
        alpha,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpPrediction {
    pub mean: Vec<f64>,
    /// Latent-function variances (without observation noise).
    pub variance: Vec<f64>,
    /// Number of variances that came out negative and were clamped to 0.
    pub clamped: usize,
}

pub fn gp_predict(model: &GpRegressor, x_star: &DMatrix<f64>) -> Result<GpPrediction> {
    let ks = kernel_matrix(&model.kernel, &model.inputs, x_star)?;
    let mean = ks.tr_mul(&model.alpha);
    let v = model
        .chol
        .l_dirty()
        .solve_lower_triangular(&ks)
        .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    let mut clamped = 0;
    let variance = (0..x_star.nrows())
        .map(|j| {
            let var = model.kernel.signal_var - v.column(j).norm_squared();
            if var < 0.0 {
                clamped += 1;
                0.0
            } else {
                var
            }
        })
        .collect();
    Ok(GpPrediction {
        mean: mean.iter().copied().collect(),
        variance,
        clamped,
    })
}

/// `log p(y) = −½yᵀ(K+σ²I)⁻¹y − Σ log L_ii − (n/2) log 2π`.
pub fn gp_log_marginal(model: &GpRegressor) -> f64 {
    let n = model.targets.len() as f64;
    let log_det_half: f64 = model.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * model.targets.dot(&model.alpha) - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// `∂ log p(y) / ∂ℓ = ½ tr((ααᵀ − (K+σ²I)⁻¹) ∂K/∂ℓ)`.
pub fn gp_log_marginal_grad_lengthscale(model: &GpRegressor) -> f64 {
    let x = &model.inputs;
    let n = x.nrows();
    let l = model.kernel.lengthscale;
    let inv = model.chol.inverse();
    let mut g = 0.0;
    for i in 0..n {
        for j in 0..n {
            let r2 = model.kernel.scaled_sq_dist(x, i, x, j);
            let dk = model.kernel.eval_sq_dist(r2) * r2 / (l * l * l);
            g += (model.alpha[i] * model.alpha[j] - inv[(i, j)]) * dk;
        }
    }
    0.5 * g
}

/// `n_functions` draws of `f(X) ~ N(0, K + jitter·I)`, one per column.
pub fn gp_sample_prior(kernel: &RbfKernel, x: &DMatrix<f64>, n_functions: usize, seed: u64) -> Result<DMatrix<f64>> {
    if x.nrows() == 0 {
        return Err(Error::config("GP prior sampling needs inputs"));
    }
    let k = kernel_matrix(kernel, x, x)?;
    let (chol, _) = cholesky_with_jitter(&k, 0.0, kernel.signal_var)?;
    let mut rng = rng::seeded(seed);
    let z = DMatrix::from_fn(x.nrows(), n_functions, |_, _| StandardNormal.sample(&mut rng));
    Ok(chol.l() * z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_closed_form() {
        let k = RbfKernel::new(1.0, 1.0).unwrap();
        let x = DMatrix::from_element(1, 1, 0.5);
        let (y, s2) = (1.7, 0.3);
        let m = gp_fit(&x, &[y], &k, s2).unwrap();
        let v = 1.0 + m.effective_noise();
        let exact = -0.5 * y * y / v - 0.5 * (2.0 * std::f64::consts::PI * v).ln();
        assert!((gp_log_marginal(&m) - exact).abs() < 1e-14);
    }

    #[test]
    fn interpolates_without_noise() {
        let k = RbfKernel::new(1.0, 1.0).unwrap();
        let x = DMatrix::from_element(1, 1, 2.0);
        let m = gp_fit(&x, &[3.0], &k, 0.0).unwrap();
        let p = gp_predict(&m, &x).unwrap();
        assert!((p.mean[0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let k = RbfKernel::new(0.5, 2.0).unwrap();
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let m = gp_fit(&x, &[1.0, -1.0], &k, 0.01).unwrap();
        let p = gp_predict(&m, &DMatrix::from_element(1, 1, 100.0)).unwrap();
        assert!(p.mean[0].abs() < 1e-12);
        assert!((p.variance[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nearby_prior_samples_correlate() {
        let k = RbfKernel::new(1.0, 1.0).unwrap();
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1e-3]);
        let f = gp_sample_prior(&k, &x, 2000, 3).unwrap();
        let (a, b) = (f.row(0), f.row(1));
        let corr = a.dot(&b) / (a.norm() * b.norm());
        assert!(corr > 0.999);
        assert_eq!(f, gp_sample_prior(&k, &x, 2000, 3).unwrap());
    }

    #[test]
    fn duplicate_inputs_need_jitter() {
        let k = RbfKernel::new(1.0, 1.0).unwrap();
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        let m = gp_fit(&x, &[0.0, 0.0, 0.0], &k, 0.0).unwrap();
        assert!(m.jitter >= 1e-10);
    }
}
