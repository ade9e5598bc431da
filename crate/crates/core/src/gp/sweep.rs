use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::classify::{gp_classify_binary, VgpConfig};
use super::kernel::RbfKernel;
use crate::data::{corrupt_labels, Dataset};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    /// Final ELBO of the variational classifier.
    pub evidence_estimate: f64,
    pub seed: u64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("fraction,train_acc,test_acc,evidence_estimate,seed\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.fraction, r.train_acc, r.test_acc, r.evidence_estimate, r.seed);
    }
    out
}

/// Fits the variational GP classifier on training labels with each fraction
/// corrupted (train accuracy is measured against the corrupted labels).
/// Fraction `f` uses corruption seed `seed + index`.
pub fn corruption_sweep(
    train: &Dataset,
    test: &Dataset,
    kernel: &RbfKernel,
    fractions: &[f64],
    seed: u64,
    config: &VgpConfig,
) -> Result<Vec<SweepRow>> {
    if !fractions.contains(&0.0) {
        return Err(Error::config("corruption fractions must include 0"));
    }
    let test_labels = test.labels().ok_or_else(|| Error::config("GP sweep needs class labels"))?;
    fractions
        .iter()
        .enumerate()
        .map(|(i, &fraction)| {
            let corrupted = corrupt_labels(train, fraction, rng::member_seed(seed, i))?;
            let labels = corrupted.labels().expect("classification data");
            let clf = gp_classify_binary(&corrupted.inputs, labels, kernel, config)?;
            Ok(SweepRow {
                fraction,
                train_acc: clf.accuracy(&corrupted.inputs, labels)?,
                test_acc: clf.accuracy(&test.inputs, test_labels)?,
                evidence_estimate: clf.elbo,
                seed,
            })
        })
        .collect()
}
