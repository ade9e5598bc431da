use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::spec::{sample_params, PriorSpec};
use crate::error::{Error, Result};
use crate::nn::{forward, NetworkSpec};
use crate::rng;

/// Pairwise prior correlations of one logit over a labelled input set.
#[derive(Debug, Clone)]
pub struct CorrelationDiagram {
    pub matrix: DMatrix<f64>,
    pub labels: Vec<usize>,
    /// Sorted distinct labels; indexes the rows/columns of `block_means`.
    pub classes: Vec<usize>,
    /// Mean correlation per class pair, excluding each input's pairing with itself.
    pub block_means: DMatrix<f64>,
    pub samples: usize,
}

impl CorrelationDiagram {
    /// Builds a diagram from per-sample function values (`samples × inputs`).
    pub fn from_samples(values: &DMatrix<f64>, labels: &[usize]) -> Result<Self> {
        let (s, n) = values.shape();
        if labels.len() != n {
            return Err(Error::dim("correlation labels", n, labels.len()));
        }
        if s < 2 {
            return Err(Error::config("at least two samples are needed for a correlation"));
        }
        let mut centered = values.clone();
        for mut col in centered.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        let cov = centered.transpose() * &centered;
        let mut scale = Vec::with_capacity(n);
        for i in 0..n {
            let v = cov[(i, i)];
            if !(v > 0.0) {
                return Err(Error::Degenerate(format!(
                    "function value at input {i} has zero variance across samples"
                )));
            }
            scale.push(v.sqrt());
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else {
                (cov[(i, j)] / (scale[i] * scale[j])).clamp(-1.0, 1.0)
            }
        });
        let mut classes = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let block_means = block_means(&matrix, labels, &classes);
        Ok(CorrelationDiagram {
            matrix,
            labels: labels.to_vec(),
            classes,
            block_means,
            samples: s,
        })
    }

    /// Mean correlation over distinct pairs sharing a label.
    pub fn within_class_mean(&self) -> f64 {
        self.pair_mean(|a, b| a == b)
    }

    /// Mean correlation over pairs with different labels.
    pub fn cross_class_mean(&self) -> f64 {
        self.pair_mean(|a, b| a != b)
    }

    /// Mean correlation over all distinct pairs.
    pub fn off_diagonal_mean(&self) -> f64 {
        self.pair_mean(|_, _| true)
    }

    fn pair_mean(&self, keep: impl Fn(usize, usize) -> bool) -> f64 {
        let n = self.labels.len();
        let (mut sum, mut count) = (0.0, 0usize);
        for i in 0..n {
            for j in (i + 1)..n {
                if keep(self.labels[i], self.labels[j]) {
                    sum += self.matrix[(i, j)];
                    count += 1;
                }
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    }

    /// `row,col,label_row,label_col,corr` for every entry.
    pub fn matrix_csv(&self) -> String {
        let mut out = String::from("row,col,label_row,label_col,corr\n");
        let n = self.labels.len();
        for i in 0..n {
            for j in 0..n {
                let _ = writeln!(
                    out,
                    "{i},{j},{},{},{:.12e}",
                    self.labels[i], self.labels[j], self.matrix[(i, j)]
                );
            }
        }
        out
    }

    /// `class_row,class_col,mean_corr` per class pair.
    pub fn block_means_csv(&self) -> String {
        let mut out = String::from("class_row,class_col,mean_corr\n");
        for (a, ca) in self.classes.iter().enumerate() {
            for (b, cb) in self.classes.iter().enumerate() {
                let _ = writeln!(out, "{ca},{cb},{:.12e}", self.block_means[(a, b)]);
            }
        }
        out
    }
}

fn block_means(matrix: &DMatrix<f64>, labels: &[usize], classes: &[usize]) -> DMatrix<f64> {
    let k = classes.len();
    let pos = |c: usize| classes.binary_search(&c).unwrap();
    let mut sums = DMatrix::<f64>::zeros(k, k);
    let mut counts = DMatrix::<f64>::zeros(k, k);
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if i == j {
                continue;
            }
            let (a, b) = (pos(labels[i]), pos(labels[j]));
            sums[(a, b)] += matrix[(i, j)];
            counts[(a, b)] += 1.0;
        }
    }
    sums.zip_map(&counts, |s, c| if c > 0.0 { s / c } else { f64::NAN })
}

/// Logit `class_index` evaluated on every input under `samples` prior draws,
/// as a `samples × inputs` matrix. Draw `s` uses seed `seed + s`.
pub fn prior_function_values(
    spec: &NetworkSpec,
    prior: &PriorSpec,
    inputs: &DMatrix<f64>,
    class_index: usize,
    samples: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if class_index >= spec.output_dim() {
        return Err(Error::dim("logit index", spec.output_dim(), class_index));
    }
    let rows: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let w = sample_params(spec, prior, rng::member_seed(seed, s))?;
            let f = forward(spec, &w, inputs)?;
            Ok(f.column(class_index).iter().copied().collect())
        })
        .collect::<Result<_>>()?;
    let n = inputs.nrows();
    Ok(DMatrix::from_fn(samples, n, |s, i| rows[s][i]))
}

/// Pearson correlation across prior samples of the `class_index` logit for
/// every pair of inputs. All pairs share one set of `samples` weight draws.
pub fn prior_logit_correlation(
    spec: &NetworkSpec,
    prior: &PriorSpec,
    inputs: &DMatrix<f64>,
    labels: &[usize],
    class_index: usize,
    samples: usize,
    seed: u64,
) -> Result<CorrelationDiagram> {
    if samples < 2 {
        return Err(Error::config("need at least two prior samples"));
    }
    if inputs.nrows() == 0 {
        return Err(Error::config("no inputs"));
    }
    let logits = prior_function_values(spec, prior, inputs, class_index, samples, seed)?;
    CorrelationDiagram::from_samples(&logits, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_inputs_fully_correlated() {
        let spec = NetworkSpec::mlp(&[3, 8, 2]).unwrap();
        let prior = PriorSpec::isotropic(&spec, 1.0).unwrap();
        let x = DMatrix::from_row_slice(3, 3, &[0.1, 0.5, -0.2, 0.1, 0.5, -0.2, 1.0, 0.0, 0.3]);
        let d = prior_logit_correlation(&spec, &prior, &x, &[0, 0, 1], 0, 200, 2).unwrap();
        assert!((d.matrix[(0, 1)] - 1.0).abs() < 1e-12);
        assert_eq!(d.matrix, d.matrix.transpose());
        assert!(d.matrix.iter().all(|c| (-1.0..=1.0).contains(c)));
        assert_eq!(d.block_means.shape(), (2, 2));
    }

    #[test]
    fn zero_variance_is_an_error() {
        let spec = NetworkSpec::bias_free(&[2, 4, 2]).unwrap();
        let prior = PriorSpec::isotropic(&spec, 1.0).unwrap();
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let err = prior_logit_correlation(&spec, &prior, &x, &[0, 1], 0, 50, 1).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn csv_shapes() {
        let values = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 1.0, 3.0, 5.0]);
        let d = CorrelationDiagram::from_samples(&values, &[4, 7]).unwrap();
        assert_eq!(d.matrix_csv().lines().count(), 5);
        assert_eq!(d.block_means_csv().lines().count(), 5);
        assert!(d.within_class_mean().is_nan());
        assert!((d.cross_class_mean() - d.matrix[(0, 1)]).abs() < 1e-15);
    }
}
