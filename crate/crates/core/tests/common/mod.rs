//! Independent oracles and scaled-down versions of the acceptance checks,
//! shared by the integration tests and the acceptance runner.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use bma_forge::experiments::{
    bundled_mnist, run_double_descent, run_prior_study, run_rethink, run_toy_bma, DoubleDescentSettings,
    PriorStudySettings, RethinkSettings, ToyBmaSettings,
};
use bma_forge::gp::{gp_fit, gp_log_marginal, gp_predict, RbfKernel};
use bma_forge::inference::{
    elbo_estimate, fit_svi_objective, hmc_chain, HmcConfig, NetObjective, PriorOnly, Schedule, SviConfig,
    SwagGaussian,
};
use bma_forge::metrics::wasserstein1;
use bma_forge::nn::{
    forward, loss_and_grad, Batch, LikelihoodSpec, NetworkSpec, ParamVector, Targets, Temperature,
};
use bma_forge::priors::{sample_params, verify_geometric_scaling, verify_output_scaling, PriorSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

pub fn gaussian_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(r))
}

/// Outcome of one check: whether it held and a one-line summary.
#[derive(Debug, Clone)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Check { passed, detail: detail.into() }
    }
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            if d == 0.0 {
                0.0
            } else {
                d / x.abs().max(y.abs())
            }
        })
        .fold(0.0, f64::max)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Standard error of the mean across replications.
pub fn std_error(v: &[f64]) -> f64 {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0);
    (var / v.len() as f64).sqrt()
}

fn random_layers(r: &mut ChaCha8Rng, max_hidden: usize) -> Vec<usize> {
    let depth = r.random_range(0..=3);
    let mut sizes = vec![r.random_range(1..=6)];
    for _ in 0..depth {
        sizes.push(r.random_range(1..=max_hidden));
    }
    sizes.push(r.random_range(1..=4));
    sizes
}

/// Output scaling of ReLU networks under rescaled Gaussian priors, checked
/// both by constructing the rescaled weights by hand and through the
/// library's verification routines.
pub fn prior_scaling(triples: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for t in 0..triples {
        let sizes = random_layers(&mut r, 12);
        let geometric = t % 2 == 1;
        let spec = if geometric { NetworkSpec::mlp(&sizes) } else { NetworkSpec::bias_free(&sizes) }.unwrap();
        let n = spec.n_layers();
        let s = r.random::<u64>();
        let (scales, bias_scales): (Vec<f64>, Vec<f64>) = if geometric {
            let g = r.random_range(0.2..5.0);
            ((0..n).map(|_| g).collect(), (1..=n).map(|i| g.powi(i as i32)).collect())
        } else {
            ((0..n).map(|_| r.random_range(0.2..5.0)).collect(), vec![0.0; n])
        };
        let base_bias = if geometric { vec![1.0; n] } else { vec![0.0; n] };
        let base = PriorSpec::new(vec![1.0; n], base_bias).unwrap();
        let w = sample_params(&spec, &base, s).unwrap();
        let mut scaled = w.clone();
        for (l, layer) in w.layout().layers().to_vec().iter().enumerate() {
            for i in layer.weight_range() {
                scaled[i] *= scales[l];
            }
            if let Some(b) = layer.bias_range() {
                for i in b {
                    scaled[i] *= bias_scales[l];
                }
            }
        }
        let x = gaussian_matrix(&mut r, 16, spec.input_dim());
        let f = forward(&spec, &w, &x).unwrap();
        let g = forward(&spec, &scaled, &x).unwrap();
        let factor: f64 = scales.iter().product();
        let expected: Vec<f64> = f.iter().map(|v| v * factor).collect();
        worst = worst.max(max_rel(g.as_slice(), &expected));
        let report = if geometric {
            verify_geometric_scaling(&spec, scales[0], s).unwrap()
        } else {
            verify_output_scaling(&spec, &scales, s).unwrap()
        };
        worst = worst.max(report.max_relative_deviation);
    }
    Check::new(worst <= 1e-9, format!("{triples} triples, max relative error {worst:.2e}"))
}

fn random_problem(r: &mut ChaCha8Rng, classification: bool) -> (NetworkSpec, LikelihoodSpec, DMatrix<f64>, Targets) {
    loop {
        let sizes = random_layers(r, 16);
        let spec = NetworkSpec::mlp(&sizes).unwrap();
        if spec.count_params() > 500 {
            continue;
        }
        let n = r.random_range(1..=8);
        let x = gaussian_matrix(r, n, spec.input_dim());
        let out = spec.output_dim();
        if classification {
            if out < 2 {
                continue;
            }
            let y = (0..n).map(|_| r.random_range(0..out)).collect();
            return (spec, LikelihoodSpec::categorical(out).unwrap(), x, Targets::Class(y));
        }
        if out != 1 {
            continue;
        }
        let y = (0..n).map(|_| StandardNormal.sample(r)).collect();
        let noise = r.random_range(0.05..2.0);
        return (spec, LikelihoodSpec::gaussian(noise).unwrap(), x, Targets::Real(y));
    }
}

fn random_prior(r: &mut ChaCha8Rng, spec: &NetworkSpec) -> PriorSpec {
    let n = spec.n_layers();
    let w = (0..n).map(|_| r.random_range(0.3..3.0)).collect();
    let b = spec.use_bias().iter().map(|&u| if u { r.random_range(0.3..3.0) } else { 0.0 }).collect();
    PriorSpec::new(w, b).unwrap()
}

/// Analytic gradients against central finite differences on random
/// networks, for both likelihoods and `T ∈ {0.5, 1, 2}`.
pub fn finite_difference_gradients(nets: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for k in 0..nets {
        let (spec, lik, x, y) = random_problem(&mut r, k % 2 == 0);
        let prior = random_prior(&mut r, &spec);
        let w = ParamVector::from_spec(&spec, (0..spec.count_params()).map(|_| StandardNormal.sample(&mut r)).collect()).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let temp = Temperature::new(t).unwrap();
            let loss = |v: &ParamVector| loss_and_grad(&spec, v, Batch::new(&x, &y), &lik, &prior, temp).unwrap();
            let (_, g) = loss(&w);
            let h = 1e-6;
            let fd: Vec<f64> = (0..w.len())
                .map(|i| {
                    let mut up = w.clone();
                    let mut down = w.clone();
                    up[i] += h;
                    down[i] -= h;
                    (loss(&up).0 - loss(&down).0) / (2.0 * h)
                })
                .collect();
            let diff: f64 = g.values().iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm = g.values().iter().map(|a| a * a).sum::<f64>().sqrt().max(fd.iter().map(|a| a * a).sum::<f64>().sqrt());
            worst = worst.max(if norm == 0.0 { diff } else { diff / norm });
            checked += 1;
        }
    }
    Check::new(worst < 1e-5, format!("{checked} (net, T) cases, max relative error {worst:.2e}"))
}

/// `(p, T)` against `(p^{1/T}, 1)`, and loss linearity in `1/T`.
pub fn tempering_equivalence(cases: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let (spec, lik, x, y) = random_problem(&mut r, k % 2 == 0);
        let prior = random_prior(&mut r, &spec);
        let w = ParamVector::from_spec(&spec, (0..spec.count_params()).map(|_| StandardNormal.sample(&mut r)).collect()).unwrap();
        let batch = Batch::new(&x, &y);
        let t = r.random_range(0.05..20.0);
        let temp = Temperature::new(t).unwrap();
        let (a, ga) = loss_and_grad(&spec, &w, batch, &lik, &prior, temp).unwrap();
        let (b, gb) = loss_and_grad(&spec, &w, batch, &lik.tempered_equivalent(temp), &prior, Temperature::ONE).unwrap();
        let scale = a.abs().max(1.0);
        worst = worst.max((a - b).abs() / scale);
        for (u, v) in ga.values().iter().zip(gb.values()) {
            worst = worst.max((u - v).abs() / u.abs().max(1.0));
        }
        // loss(T) = data/T + prior, with data and prior recovered from T = 1 and T = 2.
        let l1 = loss_and_grad(&spec, &w, batch, &lik, &prior, Temperature::ONE).unwrap().0;
        let l2 = loss_and_grad(&spec, &w, batch, &lik, &prior, Temperature::new(2.0).unwrap()).unwrap().0;
        let data = 2.0 * (l1 - l2);
        let prior_term = l1 - data;
        let predicted = data / t + prior_term;
        worst = worst.max((predicted - a).abs() / scale * 1e-3);
    }
    Check::new(worst <= 1e-12, format!("{cases} cases, max relative difference {worst:.2e}"))
}

/// A random rank-`K` SWAG Gaussian in `d` dimensions.
pub fn random_swag(d: usize, rank: usize, seed: u64) -> SwagGaussian {
    let mut r = rng(seed);
    let mean = ParamVector::flat((0..d).map(|_| StandardNormal.sample(&mut r)).collect());
    let diag_var = (0..d).map(|_| r.random_range(0.1..2.0)).collect();
    let deviations = (0..rank).map(|_| (0..d).map(|_| StandardNormal.sample(&mut r)).collect()).collect();
    SwagGaussian { mean, diag_var, deviations, rank }
}

/// Empirical covariance of SWAG draws against `½diag(σ²) + DDᵀ/(2(K−1))`.
pub fn swag_covariance(draws: usize, seed: u64) -> Check {
    let (d, k) = (20, 10);
    let swag = random_swag(d, k, seed);
    let mut oracle = DMatrix::from_diagonal(&DVector::from_vec(swag.diag_var.iter().map(|v| 0.5 * v).collect()));
    for col in &swag.deviations {
        let c = DVector::from_column_slice(col);
        oracle += &c * c.transpose() / (2.0 * (k as f64 - 1.0));
    }
    let mut sum = DVector::zeros(d);
    let mut outer = DMatrix::zeros(d, d);
    for s in 0..draws {
        let x = DVector::from_column_slice(swag.sample(bma_forge::rng::member_seed(seed, s)).unwrap().values());
        outer += &x * x.transpose();
        sum += x;
    }
    let n = draws as f64;
    let m = &sum / n;
    let emp = (outer - &m * m.transpose() * n) / (n - 1.0);
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..=i {
            let se = ((oracle[(i, i)] * oracle[(j, j)] + oracle[(i, j)].powi(2)) / n).sqrt();
            worst = worst.max((emp[(i, j)] - oracle[(i, j)]).abs() / se);
        }
        let se_mean = (oracle[(i, i)] / n).sqrt();
        worst = worst.max((m[i] - swag.mean[i]).abs() / se_mean);
    }
    Check::new(worst <= 3.0, format!("{draws} draws, d = {d}, K = {k}, max deviation {worst:.2} s.e."))
}

/// Batch-means standard error of an autocorrelated series.
pub fn batch_means_se(x: &[f64], batches: usize) -> f64 {
    let b = x.len() / batches;
    let means: Vec<f64> = (0..batches).map(|i| mean(&x[i * b..(i + 1) * b])).collect();
    std_error(&means)
}

/// HMC on a standard Gaussian: moments within 3 s.e. and a sane acceptance rate.
pub fn hmc_gaussian(samples: usize, seed: u64) -> Check {
    let d = 10;
    let target = PriorOnly::standard(d);
    let cfg = HmcConfig {
        burn_in: 1000,
        n_samples: samples,
        step_size: 0.1,
        leapfrog_steps: 10,
        ..Default::default()
    };
    let init = vec![0.5; d];
    let chain = hmc_chain(&target, init, &cfg, seed).unwrap();
    let mut worst: f64 = 0.0;
    for c in 0..d {
        let x: Vec<f64> = chain.samples.iter().map(|s| s[c]).collect();
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        let m = mean(&x);
        let v = mean(&sq) - m * m;
        worst = worst.max(m.abs() / batch_means_se(&x, 50));
        worst = worst.max((v - 1.0).abs() / batch_means_se(&sq, 50));
    }
    let acc = chain.acceptance;
    Check::new(
        worst <= 3.0 && (0.5..=0.95).contains(&acc) && chain.samples.len() == samples,
        format!("{} samples, max moment deviation {worst:.2} s.e., acceptance {acc:.3}", chain.samples.len()),
    )
}

/// Mean-field VI on a linear-Gaussian model against its closed-form posterior.
pub fn svi_conjugate(steps: usize, seed: u64) -> Check {
    svi_conjugate_with(steps, 0.005, 64, seed)
}

pub fn svi_conjugate_with(steps: usize, lr: f64, mc_samples: usize, seed: u64) -> Check {
    let (d, n, noise, alpha): (usize, usize, f64, f64) = (5, 40, 0.25, 1.5);
    let mut r = rng(seed);
    let x = gaussian_matrix(&mut r, n, d);
    let w_true = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut r));
    let y: Vec<f64> = (&x * &w_true).iter().map(|f| f + noise.sqrt() * normal(&mut r)).collect();
    let yv = DVector::from_column_slice(&y);

    let precision = x.transpose() * &x / noise + DMatrix::identity(d, d) / (alpha * alpha);
    let cov = precision.clone().try_inverse().unwrap();
    let post_mean = &cov * x.transpose() * &yv / noise;
    let marginal_cov = &x * x.transpose() * (alpha * alpha) + DMatrix::identity(n, n) * noise;
    let log_evidence = -0.5 * yv.dot(&(marginal_cov.clone().try_inverse().unwrap() * &yv))
        - 0.5 * marginal_cov.determinant().ln()
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    let spec = NetworkSpec::bias_free(&[d, 1]).unwrap();
    let targets = Targets::Real(y.clone());
    let prior = PriorSpec::new(vec![alpha], vec![0.0]).unwrap();
    let obj = NetObjective::new(&spec, &x, &targets, LikelihoodSpec::gaussian(noise).unwrap(), &prior, Temperature::ONE).unwrap();
    let cfg = SviConfig {
        steps,
        lr,
        mc_samples,
        batch_size: n,
        schedule: Schedule::Cosine,
        init_log_std: -2.0,
        seed,
    };
    let q = fit_svi_objective(&obj, &ParamVector::zeros(&spec), &cfg).unwrap().q;
    let mean_err = q.mean.values().iter().zip(post_mean.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // Closed-form ELBO of the fitted factorized Gaussian.
    let m = DVector::from_column_slice(q.mean.values());
    let s2: Vec<f64> = q.std().iter().map(|s| s * s).collect();
    let resid = &yv - &x * &m;
    let xtx = x.transpose() * &x;
    let trace: f64 = (0..d).map(|i| xtx[(i, i)] * s2[i]).sum();
    let expected_ll = -0.5 * n as f64 * (2.0 * std::f64::consts::PI * noise).ln() - (resid.norm_squared() + trace) / (2.0 * noise);
    let kl: f64 = (0..d)
        .map(|i| alpha.ln() - 0.5 * s2[i].ln() + (s2[i] + m[i] * m[i]) / (2.0 * alpha * alpha) - 0.5)
        .sum();
    let elbo = expected_ll - kl;
    let mc_elbo = elbo_estimate(&obj, &q, 2000, seed).unwrap();
    Check::new(
        mean_err < 1e-3 && elbo <= log_evidence && mc_elbo <= log_evidence,
        format!("mean error {mean_err:.2e}, ELBO {elbo:.4} (MC {mc_elbo:.4}) vs log evidence {log_evidence:.4}"),
    )
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Optimal assignment cost between equal-size samples by enumeration.
pub fn brute_force_w1(a: &[f64], b: &[f64]) -> f64 {
    permutations(a.len())
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).abs()).sum::<f64>() / a.len() as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Sorted-quantile W₁ against brute-force assignment, plus metric axioms.
pub fn wasserstein_oracle(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    let mut axioms = true;
    let draw = |r: &mut ChaCha8Rng| -> Vec<f64> { (0..5).map(|_| r.random_range(-3.0..3.0)).collect() };
    for _ in 0..instances {
        let (a, b, c) = (draw(&mut r), draw(&mut r), draw(&mut r));
        worst = worst.max((wasserstein1(&a, &b) - brute_force_w1(&a, &b)).abs());
        let (ab, ba, bc, ac) = (wasserstein1(&a, &b), wasserstein1(&b, &a), wasserstein1(&b, &c), wasserstein1(&a, &c));
        let mut shuffled = a.clone();
        shuffled.reverse();
        axioms &= wasserstein1(&a, &shuffled) == 0.0;
        axioms &= ab > 0.0 && ab == ba;
        axioms &= ac <= ab + bc + 1e-12;
    }
    Check::new(
        worst <= 1e-9 && axioms,
        format!("{instances} instances, max |sorted − assignment| {worst:.1e}, axioms {}", if axioms { "hold" } else { "violated" }),
    )
}

/// GP posterior and evidence against dense-inverse formulas, and the
/// one-point closed form.
pub fn gp_dense_oracle(sizes: &[usize], seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for &n in sizes {
        let dim = 3;
        let x = gaussian_matrix(&mut r, n, dim);
        let xs = gaussian_matrix(&mut r, 7, dim);
        let y: Vec<f64> = (0..n).map(|i| x[(i, 0)].sin() + 0.1 * normal(&mut r)).collect();
        let kern = RbfKernel::new(r.random_range(0.5..2.0), r.random_range(0.5..2.0)).unwrap();
        let noise = r.random_range(0.05..0.5);
        let model = gp_fit(&x, &y, &kern, noise).unwrap();
        assert_eq!(model.jitter, 0.0);
        let pred = gp_predict(&model, &xs).unwrap();

        let k = |a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize| {
            let r2: f64 = (0..dim).map(|c| (a[(i, c)] - b[(j, c)]).powi(2)).sum();
            kern.signal_var * (-r2 / (2.0 * kern.lengthscale * kern.lengthscale)).exp()
        };
        let kxx = DMatrix::from_fn(n, n, |i, j| k(&x, i, &x, j) + if i == j { noise } else { 0.0 });
        let kxs = DMatrix::from_fn(n, 7, |i, j| k(&x, i, &xs, j));
        let inv = kxx.clone().try_inverse().unwrap();
        let yv = DVector::from_column_slice(&y);
        let mean = kxs.transpose() * &inv * &yv;
        let var = DVector::from_fn(7, |j, _| kern.signal_var - (kxs.column(j).transpose() * &inv * kxs.column(j))[(0, 0)]);
        let lml = -0.5 * yv.dot(&(&inv * &yv)) - 0.5 * kxx.determinant().ln() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        for j in 0..7 {
            worst = worst.max((pred.mean[j] - mean[j]).abs());
            worst = worst.max((pred.variance[j] - var[j]).abs());
        }
        worst = worst.max((gp_log_marginal(&model) - lml).abs() / lml.abs().max(1.0));
    }
    // n = 1 by hand.
    let kern = RbfKernel::new(1.3, 0.7).unwrap();
    let (x0, y0, xs0, noise) = (0.4, -1.1, 1.5, 0.2);
    let model = gp_fit(&DMatrix::from_element(1, 1, x0), &[y0], &kern, noise).unwrap();
    let pred = gp_predict(&model, &DMatrix::from_element(1, 1, xs0)).unwrap();
    let kxs = 0.7 * (-(x0 - xs0) * (x0 - xs0) / (2.0 * 1.3 * 1.3)).exp();
    let denom = 0.7 + noise;
    let exact_mean = kxs * y0 / denom;
    let exact_var = 0.7 - kxs * kxs / denom;
    let exact_lml = -0.5 * y0 * y0 / denom - 0.5 * (2.0 * std::f64::consts::PI * denom).ln();
    let one = [
        (pred.mean[0] - exact_mean).abs() / exact_mean.abs(),
        (pred.variance[0] - exact_var).abs() / exact_var,
        (gp_log_marginal(&model) - exact_lml).abs() / exact_lml.abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Check::new(
        worst <= 1e-8 && one <= 1e-14,
        format!("n ∈ {sizes:?}: max deviation {worst:.1e}; n = 1 relative error {one:.1e}"),
    )
}

pub struct ToySeedResult {
    pub seed: u64,
    pub de1: f64,
    pub de10: f64,
    pub svi1: f64,
    pub svi10: f64,
    /// `(M, MultiSWAG W₁, deep-ensemble W₁ with M members)`.
    pub multiswag: Vec<(usize, f64, f64)>,
}

pub fn toy_runs(settings: &ToyBmaSettings, seeds: &[u64]) -> Vec<ToySeedResult> {
    seeds
        .iter()
        .map(|&seed| {
            let res = run_toy_bma(settings, seed).unwrap();
            let w = |m: &str, b: usize| res.w1(m, b).unwrap_or_else(|| panic!("missing W1 for {m} at {b}"));
            let max_de = *settings.ensemble_sizes.last().unwrap();
            ToySeedResult {
                seed,
                de1: w("deep_ensemble", 1),
                de10: w("deep_ensemble", max_de),
                svi1: w("svi", 1),
                svi10: w("svi", 10),
                multiswag: settings.multiswag_models.iter().map(|&m| (m, w("multiswag", m), w("deep_ensemble", m))).collect(),
            }
        })
        .collect()
}

pub fn toy_ensemble_trend(runs: &[ToySeedResult]) -> Check {
    let improving = runs.iter().filter(|r| r.de10 < r.de1).count();
    let svi_ratio = runs.iter().map(|r| (r.svi10 - r.svi1).abs() / r.svi1).fold(0.0, f64::max);
    let need = runs.len().saturating_sub(1).max(1);
    Check::new(
        improving >= need && svi_ratio <= 0.2,
        format!(
            "deep ensemble W1(10) < W1(1) in {improving}/{} seeds; SVI |W1(10) − W1(1)|/W1(1) ≤ {svi_ratio:.3} in every seed",
            runs.len()
        ),
    )
}

pub fn toy_multiswag(runs: &[ToySeedResult]) -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, &(m, _, _)) in runs[0].multiswag.iter().enumerate() {
        let ms = median(&runs.iter().map(|r| r.multiswag[i].1).collect::<Vec<_>>());
        let de = median(&runs.iter().map(|r| r.multiswag[i].2).collect::<Vec<_>>());
        ok &= ms <= de;
        parts.push(format!("M={m}: {ms:.4} vs {de:.4}"));
    }
    Check::new(ok, format!("median W1 MultiSWAG vs deep ensemble, {} seeds: {}", runs.len(), parts.join(", ")))
}

/// Random-label fitting and evidence under corruption.
pub fn rethink(settings: &RethinkSettings, seeds: &[u64]) -> Check {
    let images = bundled_mnist().unwrap();
    let mut ok = true;
    let mut worst_z: f64 = 0.0;
    let mut min_train: f64 = 1.0;
    for &seed in seeds {
        let res = run_rethink(settings, &images, seed).unwrap();
        let small = res.row("gp_small_lengthscale", 1.0).unwrap();
        min_train = min_train.min(small.train_acc);
        let z = (small.test_acc - 0.5).abs() / res.chance_se;
        worst_z = worst_z.max(z);
        ok &= small.train_acc == 1.0 && z <= 3.0;
        for method in ["gp", "bnn_laplace"] {
            ok &= res.row(method, 1.0).unwrap().evidence < res.row(method, 0.0).unwrap().evidence;
        }
    }
    Check::new(
        ok,
        format!(
            "{} seeds: small-lengthscale train acc ≥ {min_train}, test acc within {worst_z:.2} s.e. of 0.5, evidence falls for GP and Laplace",
            seeds.len()
        ),
    )
}

/// Mean off-diagonal correlation for same-class and different-class pairs.
pub fn class_pair_means(matrix: &DMatrix<f64>, labels: &[usize]) -> (f64, f64) {
    let (mut within, mut cross, mut nw, mut nc) = (0.0, 0.0, 0usize, 0usize);
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if i == j {
                continue;
            }
            if labels[i] == labels[j] {
                within += matrix[(i, j)];
                nw += 1;
            } else {
                cross += matrix[(i, j)];
                nc += 1;
            }
        }
    }
    (within / nw as f64, cross / nc as f64)
}

pub fn prior_correlations(settings: &PriorStudySettings, seeds: &[u64]) -> Check {
    let images = bundled_mnist().unwrap();
    let mut wins = vec![0usize; settings.alphas.len()];
    for &seed in seeds {
        let res = run_prior_study(settings, &images, seed).unwrap();
        for (k, (alpha, diagram)) in res.diagrams.iter().enumerate() {
            assert_eq!(*alpha, settings.alphas[k]);
            assert_eq!(diagram.samples, settings.samples);
            let (w, c) = class_pair_means(&diagram.matrix, &diagram.labels);
            if w > c {
                wins[k] += 1;
            }
        }
    }
    let need = seeds.len().saturating_sub(1).max(1);
    let parts: Vec<String> = settings.alphas.iter().zip(&wins).map(|(a, w)| format!("α={a}: {w}/{}", seeds.len())).collect();
    Check::new(wins.iter().all(|&w| w >= need), format!("within > cross in {}", parts.join(", ")))
}

/// Width sweep: MultiSWAG(M) ≤ SWAG ≤ SGD at every width and no
/// MultiSWAG increase beyond one standard error.
pub fn double_descent(settings: &DoubleDescentSettings, seeds: &[u64]) -> Check {
    let images = bundled_mnist().unwrap();
    let runs: Vec<_> = seeds.iter().map(|&s| run_double_descent(settings, &images, s).unwrap()).collect();
    let m = *settings.model_counts.last().unwrap();
    let series = |method: &str, mult: usize, models: usize| -> Vec<f64> {
        runs.iter().map(|r| r.get(method, mult, models).unwrap().scores.nll).collect()
    };
    let mut ok = true;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut prev: Option<f64> = None;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut curve = Vec::new();
    for &mult in &settings.multipliers {
        let sgd = series("sgd", mult, 1);
        let swag = series("swag", mult, 1);
        let multi = series("multiswag", mult, m);
        let (ms, sw, sg) = (median(&multi), median(&swag), median(&sgd));
        let gap1 = ms - sw - std_error(&swag);
        let gap2 = sw - sg - std_error(&sgd);
        worst_gap = worst_gap.max(gap1).max(gap2);
        ok &= gap1 <= 0.0 && gap2 <= 0.0;
        if let Some(p) = prev {
            let rise = ms - p - std_error(&multi);
            worst_rise = worst_rise.max(rise);
            ok &= rise <= 0.0;
        }
        prev = Some(ms);
        curve.push(format!("{ms:.3}"));
    }
    Check::new(
        ok,
        format!(
            "{} widths, {} seeds; MultiSWAG({m}) NLL {}; worst ordering margin {worst_gap:+.3}, worst rise beyond s.e. {worst_rise:+.3}",
            settings.multipliers.len(),
            seeds.len(),
            curve.join(" ")
        ),
    )
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_bma-forge"))
}

pub fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

pub const COMMANDS: [&str; 6] = ["toy-bma", "prior-study", "rethink", "double-descent", "temper-sweep", "shift-eval"];

/// Runs the binary and returns its exit code.
pub fn run_cli(args: &[&str], workers: Option<&str>) -> (i32, String) {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    if let Some(w) = workers {
        cmd.env("BMA_FORGE_WORKERS", w);
    }
    let out = cmd.output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

/// Data files (everything except metadata sidecars) in `dir`, sorted.
pub fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            let name = p.file_name()?.to_str()?.to_string();
            (p.is_file() && !name.ends_with(".meta.json")).then(|| (name, std::fs::read(&p).unwrap()))
        })
        .collect();
    out.sort();
    out
}

/// Every command twice on the smoke configs; data files must match bytewise.
pub fn cli_reproducible(root: &Path) -> Check {
    let mut failures = Vec::new();
    let mut files = 0;
    for cmd in COMMANDS {
        let cfg = config_dir().join("smoke").join(format!("{cmd}.cfg"));
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = root.join(format!("{cmd}-{rep}"));
            let (code, err) = run_cli(&[cmd, cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()], None);
            if code != 0 {
                failures.push(format!("{cmd} exited {code}: {}", err.trim()));
            }
            outputs.push(data_files(&dir));
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            failures.push(format!("{cmd} outputs differ"));
        }
        files += outputs[0].len();
    }
    Check::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} commands, {files} data files byte-identical across reruns", COMMANDS.len())
        } else {
            failures.join("; ")
        },
    )
}
