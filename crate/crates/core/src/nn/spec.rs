use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
}

/// Architecture of a fully connected network: layer widths from input to
/// output, hidden activation, and whether each weight layer has a bias.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    layer_sizes: Vec<usize>,
    activation: Activation,
    use_bias: Vec<bool>,
}

impl NetworkSpec {
    /// `use_bias` has one entry per weight layer (`layer_sizes.len() - 1`).
    pub fn new(layer_sizes: Vec<usize>, use_bias: Vec<bool>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::config(
                "a network needs at least an input and an output layer",
            ));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::config("layer sizes must be positive"));
        }
        if use_bias.len() != layer_sizes.len() - 1 {
            return Err(Error::dim(
                "bias flags",
                layer_sizes.len() - 1,
                use_bias.len(),
            ));
        }
        Ok(NetworkSpec {
            layer_sizes,
            activation: Activation::Relu,
            use_bias,
        })
    }

    /// Every layer carries a bias.
    pub fn mlp(layer_sizes: &[usize]) -> Result<Self> {
        let n = layer_sizes.len().saturating_sub(1);
        Self::new(layer_sizes.to_vec(), vec![true; n])
    }

    pub fn bias_free(layer_sizes: &[usize]) -> Result<Self> {
        let n = layer_sizes.len().saturating_sub(1);
        Self::new(layer_sizes.to_vec(), vec![false; n])
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn use_bias(&self) -> &[bool] {
        &self.use_bias
    }

    /// Number of weight layers.
    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn hidden_sizes(&self) -> &[usize] {
        &self.layer_sizes[1..self.layer_sizes.len() - 1]
    }

    pub fn has_any_bias(&self) -> bool {
        self.use_bias.iter().any(|&b| b)
    }

    pub fn count_params(&self) -> usize {
        self.layout().len()
    }

    pub fn layout(&self) -> Layout {
        let mut layers = Vec::with_capacity(self.n_layers());
        let mut offset = 0;
        for (l, pair) in self.layer_sizes.windows(2).enumerate() {
            let (inputs, outputs) = (pair[0], pair[1]);
            let weight_offset = offset;
            offset += inputs * outputs;
            let bias_offset = if self.use_bias[l] {
                let b = offset;
                offset += outputs;
                Some(b)
            } else {
                None
            };
            layers.push(LayerLayout {
                inputs,
                outputs,
                weight_offset,
                bias_offset,
            });
        }
        Layout { layers, len: offset }
    }

    /// Same architecture with hidden widths multiplied by `factor`.
    pub fn widened(&self, factor: usize) -> Result<Self> {
        let last = self.layer_sizes.len() - 1;
        let sizes = self
            .layer_sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| if i == 0 || i == last { s } else { s * factor })
            .collect();
        Self::new(sizes, self.use_bias.clone())
    }
}

pub fn count_params(spec: &NetworkSpec) -> usize {
    spec.count_params()
}

/// Position of one weight layer inside the flat parameter array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerLayout {
    pub inputs: usize,
    pub outputs: usize,
    pub weight_offset: usize,
    pub bias_offset: Option<usize>,
}

impl LayerLayout {
    pub fn weight_len(&self) -> usize {
        self.inputs * self.outputs
    }

    pub fn weight_range(&self) -> std::ops::Range<usize> {
        self.weight_offset..self.weight_offset + self.weight_len()
    }

    pub fn bias_range(&self) -> Option<std::ops::Range<usize>> {
        self.bias_offset.map(|b| b..b + self.outputs)
    }
}

/// Map from layers to contiguous, non-overlapping ranges of a flat vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    layers: Vec<LayerLayout>,
    len: usize,
}

impl Layout {
    /// A single bias-free block of `dim` entries, for parameter vectors that
    /// do not come from a network.
    pub fn flat(dim: usize) -> Layout {
        Layout {
            layers: vec![LayerLayout {
                inputs: dim,
                outputs: 1,
                weight_offset: 0,
                bias_offset: None,
            }],
            len: dim,
        }
    }

    /// Rebuilds a layout from per-layer `(inputs, outputs, has_bias)` triples.
    pub fn from_shapes(shapes: &[(usize, usize, bool)]) -> Layout {
        let mut layers = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for &(inputs, outputs, bias) in shapes {
            let weight_offset = offset;
            offset += inputs * outputs;
            let bias_offset = bias.then(|| {
                let b = offset;
                offset += outputs;
                b
            });
            layers.push(LayerLayout {
                inputs,
                outputs,
                weight_offset,
                bias_offset,
            });
        }
        Layout { layers, len: offset }
    }

    pub fn layers(&self) -> &[LayerLayout] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Index of the layer owning flat coordinate `i`, and whether it is a bias.
    pub fn locate(&self, i: usize) -> Option<(usize, bool)> {
        self.layers.iter().enumerate().find_map(|(l, layer)| {
            if layer.weight_range().contains(&i) {
                Some((l, false))
            } else if layer.bias_range().is_some_and(|r| r.contains(&i)) {
                Some((l, true))
            } else {
                None
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_hand_sums() {
        assert_eq!(NetworkSpec::mlp(&[1, 1]).unwrap().count_params(), 2);
        // 2*10+10 + 10*10+10 + 10*10+10 + 10*1+1
        assert_eq!(
            NetworkSpec::mlp(&[2, 10, 10, 10, 1]).unwrap().count_params(),
            261
        );
        assert_eq!(NetworkSpec::bias_free(&[3, 4]).unwrap().count_params(), 12);
    }

    #[test]
    fn layout_tiles_the_vector() {
        let spec = NetworkSpec::new(vec![3, 5, 4, 2], vec![true, false, true]).unwrap();
        let layout = spec.layout();
        let mut covered = vec![0u8; layout.len()];
        for layer in layout.layers() {
            for i in layer.weight_range() {
                covered[i] += 1;
            }
            if let Some(r) = layer.bias_range() {
                for i in r {
                    covered[i] += 1;
                }
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
        assert_eq!(layout.locate(15), Some((0, true)));
        assert_eq!(layout.locate(20), Some((1, false)));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(NetworkSpec::mlp(&[3]).is_err());
        assert!(NetworkSpec::mlp(&[3, 0, 1]).is_err());
        assert!(NetworkSpec::new(vec![3, 2, 1], vec![true]).is_err());
    }

    #[test]
    fn widening_scales_hidden_layers_only() {
        let spec = NetworkSpec::mlp(&[4, 3, 5, 2]).unwrap();
        let wide = spec.widened(3).unwrap();
        assert_eq!(wide.layer_sizes(), &[4, 9, 15, 2]);
    }
}
