use super::predictive::{PredictiveKind, PredictiveSamples};
use crate::error::{Error, Result};

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// One-dimensional Wasserstein-1 distance between two empirical
/// distributions with uniform weights.
///
/// Equal sizes use the sorted coupling `mean |a₍ᵢ₎ − b₍ᵢ₎|`; otherwise the
/// exact integral `∫ |F_a(t) − F_b(t)| dt` over the merged support.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "empty sample set");
    let (sa, sb) = (sorted(a), sorted(b));
    if sa.len() == sb.len() {
        return sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / sa.len() as f64;
    }
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    let mut prev = sa[0].min(sb[0]);
    while i < sa.len() || j < sb.len() {
        let next = match (sa.get(i), sb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < sa.len() && sa[i] == next {
            i += 1;
        }
        while j < sb.len() && sb[j] == next {
            j += 1;
        }
        prev = next;
    }
    total
}

/// Per-location W₁ between two regression predictives and its average.
#[derive(Debug, Clone, PartialEq)]
pub struct W1Report {
    pub mean: f64,
    pub per_location: Vec<f64>,
}

/// Compares sampled function values location by location; observation
/// noise is identical on both sides and left out.
pub fn wasserstein1_predictive(a: &PredictiveSamples, b: &PredictiveSamples) -> Result<W1Report> {
    if a.inputs != b.inputs {
        return Err(Error::config("predictives are evaluated on different input grids"));
    }
    let regression = |p: &PredictiveSamples| matches!(p.kind, PredictiveKind::Regression { .. });
    if !regression(a) || !regression(b) {
        return Err(Error::config("W1 comparison needs regression predictives"));
    }
    let per_location: Vec<f64> = (0..a.n_inputs())
        .map(|i| wasserstein1(a.regression_samples(i), b.regression_samples(i)))
        .collect();
    let mean = per_location.iter().sum::<f64>() / per_location.len() as f64;
    Ok(W1Report { mean, per_location })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_masses() {
        assert_eq!(wasserstein1(&[2.0], &[5.0]), 3.0);
        assert_eq!(wasserstein1(&[1.0, 4.0, 2.0], &[4.0, 2.0, 1.0]), 0.0);
    }

    #[test]
    fn unequal_sizes() {
        // F_a jumps to 1 at 0; F_b is ½ on [0, 1): ∫|F_a − F_b| = ½.
        assert!((wasserstein1(&[0.0], &[0.0, 1.0]) - 0.5).abs() < 1e-15);
        // Replicating a sample set does not change the distribution.
        let a = [0.3, -1.2, 2.5];
        let b = [0.3, -1.2, 2.5, 0.3, -1.2, 2.5];
        assert!(wasserstein1(&a, &b).abs() < 1e-15);
        // Agrees with the equal-size coupling after replication.
        let c = [0.0, 1.0, 5.0, 7.0, 2.0, 3.0];
        let doubled_a: Vec<f64> = a.iter().chain(a.iter()).copied().collect();
        assert!((wasserstein1(&a, &c) - wasserstein1(&doubled_a, &c)).abs() < 1e-12);
    }
}
