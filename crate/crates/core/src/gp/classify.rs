use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::kernel::{kernel_matrix, RbfKernel};
use super::regression::cholesky_with_jitter;
use crate::error::{Error, Result};
use crate::inference::{Adam, Schedule};

/// Gauss–Hermite nodes and weights for `∫ e^{−t²} g(t) dt`, by Golub–Welsch.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| if i + 1 == j || j + 1 == i { ((i.max(j)) as f64 / 2.0).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub const QUADRATURE_NODES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VgpConfig {
    pub steps: usize,
    pub lr: f64,
    pub schedule: Schedule,
    /// Initial `log s` of every latent marginal.
    pub init_log_std: f64,
}

impl Default for VgpConfig {
    fn default() -> Self {
        VgpConfig {
            steps: 1500,
            lr: 0.05,
            schedule: Schedule::Cosine,
            init_log_std: 0.0,
        }
    }
}

/// Bernoulli-logit GP classifier with `q(f) = Π N(m_i, s_i²)` over the
/// latent values at the training inputs.
#[derive(Debug, Clone)]
pub struct VariationalGpClassifier {
    pub kernel: RbfKernel,
    pub inputs: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub log_std: DVector<f64>,
    pub elbo: f64,
    pub elbo_trace: Vec<f64>,
    /// `K⁻¹ m`, for predictive means.
    weights: DVector<f64>,
}

impl VariationalGpClassifier {
    /// Conditional mean of the latent function at `x_star`.
    pub fn latent_mean(&self, x_star: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(kernel_matrix(&self.kernel, &self.inputs, x_star)?.tr_mul(&self.weights))
    }

    /// `σ(E[f*])`, the probability of class 1.
    pub fn predict_proba(&self, x_star: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.latent_mean(x_star)?.iter().map(|f| sigmoid(*f)).collect())
    }

    /// Class 1 when the latent mean is positive.
    pub fn predict(&self, x_star: &DMatrix<f64>) -> Result<Vec<usize>> {
        Ok(self.latent_mean(x_star)?.iter().map(|f| usize::from(*f > 0.0)).collect())
    }

    pub fn accuracy(&self, x: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
        let pred = self.predict(x)?;
        if pred.len() != labels.len() {
            return Err(Error::dim("classifier labels", pred.len(), labels.len()));
        }
        Ok(pred.iter().zip(labels).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64)
    }
}

fn sigmoid(f: f64) -> f64 {
    if f >= 0.0 {
        1.0 / (1.0 + (-f).exp())
    } else {
        let e = f.exp();
        e / (1.0 + e)
    }
}

/// `log p(y|f) = y·f − softplus(f)`.
fn log_lik(y: f64, f: f64) -> f64 {
    let softplus = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
    y * f - softplus
}

/// Maximizes `Σ E_q[log p(y_i|f_i)] − KL(q ‖ N(0, K))` by Adam. The mean is
/// optimized in whitened coordinates `m = L u`; expectations use 20-node
/// Gauss–Hermite quadrature.
pub fn gp_classify_binary(x: &DMatrix<f64>, labels: &[usize], kernel: &RbfKernel, config: &VgpConfig) -> Result<VariationalGpClassifier> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::dim("GP labels", n, labels.len()));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::config("binary GP classification needs labels in {0, 1}"));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::config("binary GP classification needs both classes present"));
    }
    if config.steps == 0 || !(config.lr > 0.0) {
        return Err(Error::config("VGP steps and learning rate must be positive"));
    }
    let k = kernel_matrix(kernel, x, x)?;
    let (chol, _) = cholesky_with_jitter(&k, 0.0, kernel.signal_var)?;
    let l = chol.l();
    let k_inv_diag = chol.inverse().diagonal();
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let (nodes, weights) = gauss_hermite(QUADRATURE_NODES);
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();

    let mut u = DVector::zeros(n);
    let mut rho = DVector::from_element(n, config.init_log_std);
    let mut adam_u = Adam::new(n);
    let mut adam_rho = Adam::new(n);
    let mut trace = Vec::with_capacity(config.steps + 1);
    let objective = |u: &DVector<f64>, rho: &DVector<f64>| -> (f64, DVector<f64>, DVector<f64>) {
        let m = &l * u;
        let mut ell = 0.0;
        let mut dm = DVector::zeros(n);
        let mut drho = DVector::zeros(n);
        for i in 0..n {
            let s = rho[i].exp();
            for (t, w) in nodes.iter().zip(&weights) {
                let f = m[i] + std::f64::consts::SQRT_2 * s * t;
                let c = w * inv_sqrt_pi;
                ell += c * log_lik(y[i], f);
                let g = y[i] - sigmoid(f);
                dm[i] += c * g;
                drho[i] += c * g * std::f64::consts::SQRT_2 * t * s;
            }
        }
        let s2: Vec<f64> = rho.iter().map(|r| (2.0 * r).exp()).collect();
        let kl = 0.5 * (s2.iter().zip(k_inv_diag.iter()).map(|(a, b)| a * b).sum::<f64>() + u.norm_squared() - n as f64 + log_det
            - 2.0 * rho.sum());
        let elbo = ell - kl;
        // ascent gradients
        let du = l.tr_mul(&dm) - u;
        for i in 0..n {
            drho[i] -= s2[i] * k_inv_diag[i] - 1.0;
        }
        (elbo, du, drho)
    };
    for step in 0..config.steps {
        let (elbo, du, drho) = objective(&u, &rho);
        if !elbo.is_finite() {
            return Err(Error::numerical(format!("VGP ELBO diverged at step {step}")));
        }
        trace.push(elbo);
        let lr = config.lr * config.schedule.factor(step as f64 / config.steps as f64);
        let neg_u: Vec<f64> = du.iter().map(|v| -v).collect();
        let neg_rho: Vec<f64> = drho.iter().map(|v| -v).collect();
        adam_u.step(u.as_mut_slice(), &neg_u, lr);
        adam_rho.step(rho.as_mut_slice(), &neg_rho, lr);
    }
    let (elbo, _, _) = objective(&u, &rho);
    if !elbo.is_finite() {
        return Err(Error::numerical("VGP ELBO is not finite"));
    }
    trace.push(elbo);
    let mean = &l * &u;
    let weights = l
        .transpose()
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    Ok(VariationalGpClassifier {
        kernel: *kernel,
        inputs: x.clone(),
        mean,
        log_std: rho,
        elbo,
        elbo_trace: trace,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let (t, w) = gauss_hermite(20);
        let sp = std::f64::consts::PI.sqrt();
        assert!((w.iter().sum::<f64>() - sp).abs() < 1e-12);
        let m2: f64 = t.iter().zip(&w).map(|(t, w)| w * t * t).sum();
        let m4: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(4)).sum();
        assert!((m2 - sp / 2.0).abs() < 1e-12);
        assert!((m4 - 0.75 * sp).abs() < 1e-12);
    }

    #[test]
    fn separable_clusters() {
        let xs: Vec<f64> = (0..10).map(|i| -3.0 + 0.1 * i as f64).chain((0..10).map(|i| 3.0 + 0.1 * i as f64)).collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let x = DMatrix::from_column_slice(20, 1, &xs);
        let k = RbfKernel::new(1.0, 1.0).unwrap();
        let clf = gp_classify_binary(&x, &labels, &k, &VgpConfig::default()).unwrap();
        assert_eq!(clf.accuracy(&x, &labels).unwrap(), 1.0);
        let tail = &clf.elbo_trace[clf.elbo_trace.len() * 9 / 10..];
        assert!(tail.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn single_class_rejected() {
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let k = RbfKernel::new(1.0, 1.0).unwrap();
        assert!(gp_classify_binary(&x, &[1, 1], &k, &VgpConfig::default()).is_err());
    }
}
