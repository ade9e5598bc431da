use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// One evaluated metric, serialized as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub metric: String,
    pub value: f64,
    #[serde(rename = "J")]
    pub draws: usize,
    pub posterior_tag: String,
    pub seed: u64,
}

impl MetricRecord {
    pub fn new(metric: &str, value: f64, draws: usize, posterior_tag: &str, seed: u64) -> Self {
        MetricRecord {
            metric: metric.to_string(),
            value,
            draws,
            posterior_tag: posterior_tag.to_string(),
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metric record serializes")
    }
}

/// `x,w1` rows for a per-location Wasserstein curve.
pub fn w1_curve_csv(xs: &[f64], w1: &[f64]) -> String {
    let mut out = String::from("x,w1\n");
    for (x, w) in xs.iter().zip(w1) {
        let _ = writeln!(out, "{x},{w}");
    }
    out
}
