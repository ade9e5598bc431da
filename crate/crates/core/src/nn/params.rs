use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::spec::{Layout, NetworkSpec};
use crate::error::{Error, Result};

/// Flattened network weights together with their layer layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Layout,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, layout: Layout) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::dim("parameter vector", layout.len(), values.len()));
        }
        Ok(ParamVector { values, layout })
    }

    pub fn zeros(spec: &NetworkSpec) -> Self {
        let layout = spec.layout();
        ParamVector {
            values: vec![0.0; layout.len()],
            layout,
        }
    }

    /// A vector with a single flat block, for non-network models.
    pub fn flat(values: Vec<f64>) -> Self {
        let layout = Layout::flat(values.len());
        ParamVector { values, layout }
    }

    pub fn from_spec(spec: &NetworkSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(values, spec.layout())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same layout, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.layout.clone())
    }

    pub fn matches(&self, spec: &NetworkSpec) -> bool {
        self.layout == spec.layout()
    }

    pub fn check(&self, spec: &NetworkSpec) -> Result<()> {
        if self.matches(spec) {
            Ok(())
        } else {
            Err(Error::dim(
                "parameter layout",
                spec.count_params(),
                self.values.len(),
            ))
        }
    }

    pub fn distance(&self, other: &ParamVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.values[self.layout.layers()[layer].weight_range()]
    }

    pub fn bias(&self, layer: usize) -> Option<&[f64]> {
        self.layout.layers()[layer]
            .bias_range()
            .map(|r| &self.values[r])
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl IndexMut<usize> for ParamVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}
