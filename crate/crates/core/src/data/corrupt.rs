use rand::seq::index;
use rand::Rng as _;

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::Targets;
use crate::rng;

/// Resamples the labels of `round(fraction·n)` uniformly chosen rows,
/// uniformly over all classes (a row may redraw its original label).
/// The chosen rows are recorded in the provenance, sorted.
pub fn corrupt_labels(ds: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::config(format!("corruption fraction {fraction} outside [0, 1]")));
    }
    let classes = ds
        .classes
        .ok_or_else(|| Error::config("label corruption needs a classification dataset"))?;
    let Targets::Class(labels) = &ds.targets else {
        return Err(Error::config("label corruption needs a classification dataset"));
    };
    let n = ds.len();
    let count = (fraction * n as f64).round() as usize;
    let mut rng = rng::seeded(seed);
    let mut chosen = index::sample(&mut rng, n, count).into_vec();
    chosen.sort_unstable();
    let mut new_labels = labels.clone();
    for &i in &chosen {
        new_labels[i] = rng.random_range(0..classes);
    }
    let mut out = ds.clone();
    out.targets = Targets::Class(new_labels);
    out.provenance = out
        .provenance
        .with("corruption_fraction", fraction)
        .with("corruption_seed", seed);
    out.provenance.corrupted = chosen;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::data::{Provenance, Split};

    fn ds(n: usize) -> Dataset {
        let x = DMatrix::from_fn(n, 1, |i, _| i as f64);
        let y = (0..n).map(|i| i % 4).collect();
        Dataset::classification(x, y, 4, Split::Train, Provenance::new("t", None)).unwrap()
    }

    #[test]
    fn zero_fraction_is_identity() {
        let d = ds(50);
        let c = corrupt_labels(&d, 0.0, 1).unwrap();
        assert_eq!(c.targets, d.targets);
        assert!(c.provenance.corrupted.is_empty());
    }

    #[test]
    fn counts_and_untouched_rows() {
        let d = ds(101);
        for f in [0.1, 0.25, 0.5, 1.0] {
            let c = corrupt_labels(&d, f, 7).unwrap();
            assert_eq!(c.provenance.corrupted.len(), (f * 101.0_f64).round() as usize);
            let (a, b) = (d.labels().unwrap(), c.labels().unwrap());
            for i in 0..101 {
                if c.provenance.corrupted.binary_search(&i).is_err() {
                    assert_eq!(a[i], b[i]);
                }
            }
        }
    }

    #[test]
    fn regression_rejected() {
        let x = DMatrix::from_element(2, 1, 0.0);
        let r = Dataset::regression(x, vec![0.0, 1.0], Split::Train, Provenance::default()).unwrap();
        assert!(corrupt_labels(&r, 0.5, 0).is_err());
    }
}
