use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{select_rows, NetworkSpec, Targets};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

/// Where a dataset came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
    pub params: BTreeMap<String, String>,
    /// Rows whose labels were resampled by [`corrupt_labels`](super::corrupt_labels).
    pub corrupted: Vec<usize>,
}

impl Provenance {
    pub fn new(generator: impl Into<String>, seed: Option<u64>) -> Self {
        Provenance {
            generator: generator.into(),
            seed,
            ..Default::default()
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

/// Inputs (one example per row) with regression targets or class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: DMatrix<f64>,
    pub targets: Targets,
    /// Number of classes for classification data.
    pub classes: Option<usize>,
    pub split: Split,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn regression(inputs: DMatrix<f64>, targets: Vec<f64>, split: Split, provenance: Provenance) -> Result<Self> {
        let ds = Dataset {
            inputs,
            targets: Targets::Real(targets),
            classes: None,
            split,
            provenance,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn classification(
        inputs: DMatrix<f64>,
        labels: Vec<usize>,
        classes: usize,
        split: Split,
        provenance: Provenance,
    ) -> Result<Self> {
        let ds = Dataset {
            inputs,
            targets: Targets::Class(labels),
            classes: Some(classes),
            split,
            provenance,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.inputs.nrows();
        if n == 0 {
            return Err(Error::config("dataset is empty"));
        }
        if self.targets.len() != n {
            return Err(Error::dim("dataset targets", n, self.targets.len()));
        }
        if self.inputs.iter().any(|v| v.is_nan()) {
            return Err(Error::Format("NaN input".into()));
        }
        if let (Targets::Class(y), Some(c)) = (&self.targets, self.classes) {
            if let Some(bad) = y.iter().find(|&&l| l >= c) {
                return Err(Error::Format(format!("label {bad} >= {c} classes")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.targets.as_classes()
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            inputs: select_rows(&self.inputs, rows),
            targets: self.targets.select(rows),
            classes: self.classes,
            split: self.split,
            provenance: self.provenance.clone(),
        }
    }

    /// Header row `x0..x{d-1},target`, then one row per example.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::new();
        for j in 0..d {
            let _ = write!(out, "x{j},");
        }
        out.push_str("target\n");
        for i in 0..self.len() {
            for j in 0..d {
                let _ = write!(out, "{},", self.inputs[(i, j)]);
            }
            match &self.targets {
                Targets::Real(y) => {
                    let _ = writeln!(out, "{}", y[i]);
                }
                Targets::Class(y) => {
                    let _ = writeln!(out, "{}", y[i]);
                }
            }
        }
        out
    }

    /// Parses [`Dataset::to_csv`] output. `classes` selects label parsing.
    pub fn from_csv(text: &str, classes: Option<usize>, split: Split) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))?;
        let d = header.split(',').count() - 1;
        let mut xs = Vec::new();
        let mut reals = Vec::new();
        let mut labels = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d + 1 {
                return Err(Error::Format(format!("row {row}: expected {} fields", d + 1)));
            }
            for f in &fields[..d] {
                xs.push(f.trim().parse::<f64>().map_err(|e| Error::Format(format!("row {row}: {e}")))?);
            }
            let t = fields[d].trim();
            if classes.is_some() {
                labels.push(t.parse::<usize>().map_err(|e| Error::Format(format!("row {row}: {e}")))?);
            } else {
                reals.push(t.parse::<f64>().map_err(|e| Error::Format(format!("row {row}: {e}")))?);
            }
        }
        let n = xs.len() / d.max(1);
        let inputs = DMatrix::from_row_slice(n, d, &xs);
        let prov = Provenance::new("csv", None);
        match classes {
            Some(c) => Dataset::classification(inputs, labels, c, split, prov),
            None => Dataset::regression(inputs, reals, split, prov),
        }
    }

    /// Writes `<path>` as CSV and `<path>.meta.json` with the provenance.
    pub fn write_with_sidecar(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        let meta = serde_json::json!({
            "provenance": self.provenance,
            "split": self.split,
            "classes": self.classes,
            "rows": self.len(),
            "dim": self.dim(),
        });
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".meta.json");
        std::fs::write(sidecar, serde_json::to_string_pretty(&meta).unwrap())?;
        Ok(())
    }
}

/// Stratified sample of `per_class` rows from each class in `classes`,
/// grouped by class in the given order.
pub fn subsample(ds: &Dataset, per_class: usize, classes: &[usize], seed: u64) -> Result<Dataset> {
    let labels = ds
        .labels()
        .ok_or_else(|| Error::config("subsample needs a classification dataset"))?;
    let mut rng = rng::seeded(seed);
    let mut rows = Vec::with_capacity(per_class * classes.len());
    for &c in classes {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < per_class {
            return Err(Error::config(format!(
                "class {c} has {} examples, {per_class} requested",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let mut chosen = members[..per_class].to_vec();
        chosen.sort_unstable();
        rows.extend(chosen);
    }
    let mut out = ds.select(&rows);
    out.provenance = out
        .provenance
        .with("subsample_per_class", per_class)
        .with("subsample_classes", format!("{classes:?}"))
        .with("subsample_seed", seed);
    Ok(out)
}

/// Copies of `base` with hidden widths multiplied by each multiplier.
pub fn width_sweep(base: &NetworkSpec, multipliers: &[usize]) -> Result<Vec<NetworkSpec>> {
    if multipliers.is_empty() || multipliers.contains(&0) {
        return Err(Error::config("width multipliers must be positive"));
    }
    for w in multipliers.windows(2) {
        if w[0] == w[1] {
            return Err(Error::config(format!("duplicate width multiplier {}", w[0])));
        }
        if w[0] > w[1] {
            return Err(Error::config("width multipliers must be ascending"));
        }
    }
    multipliers.iter().map(|&m| base.widened(m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(n: usize, classes: usize) -> Dataset {
        let x = DMatrix::from_fn(n, 2, |i, j| (i * 2 + j) as f64);
        let y = (0..n).map(|i| i % classes).collect();
        Dataset::classification(x, y, classes, Split::Train, Provenance::new("test", None)).unwrap()
    }

    #[test]
    fn subsample_filters_classes() {
        let ds = labelled(60, 3);
        let s = subsample(&ds, 5, &[0, 1], 4).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.labels().unwrap().iter().all(|&l| l < 2));
        assert!(subsample(&ds, 21, &[0], 4).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let ds = labelled(7, 3);
        let back = Dataset::from_csv(&ds.to_csv(), Some(3), Split::Train).unwrap();
        assert_eq!(back.inputs, ds.inputs);
        assert_eq!(back.targets, ds.targets);

        let x = DMatrix::from_row_slice(2, 1, &[0.1, -2.5e-7]);
        let reg = Dataset::regression(x, vec![1.0 / 3.0, 2.0], Split::Test, Provenance::default()).unwrap();
        let back = Dataset::from_csv(&reg.to_csv(), None, Split::Test).unwrap();
        assert_eq!(back.targets, reg.targets);
    }

    #[test]
    fn width_sweep_rules() {
        let base = NetworkSpec::mlp(&[4, 3, 2]).unwrap();
        let specs = width_sweep(&base, &[1, 2, 4]).unwrap();
        assert_eq!(specs[0], base);
        assert_eq!(specs[2].layer_sizes(), &[4, 12, 2]);
        let counts: Vec<usize> = specs.iter().map(|s| s.count_params()).collect();
        assert!(counts.windows(2).all(|w| w[0] < w[1]));
        assert!(width_sweep(&base, &[1, 1, 2]).is_err());
    }
}
