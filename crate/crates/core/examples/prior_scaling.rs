//! Weight-scale priors on a bias-free ReLU net only rescale its outputs.
//!
//! Run with `cargo run --example prior_scaling`.

use bma_forge::nn::NetworkSpec;
use bma_forge::priors::{verify_geometric_scaling, verify_output_scaling};

fn main() -> bma_forge::Result<()> {
    let bias_free = NetworkSpec::bias_free(&[4, 16, 16, 1])?;
    for scales in [[0.5, 1.0, 2.0], [2.0, 3.0, 0.1], [1.0, 1.0, 10.0]] {
        let r = verify_output_scaling(&bias_free, &scales, 7)?;
        println!("scales {scales:?}: outputs x{:.3}, max rel deviation {:.2e}", r.factor, r.max_relative_deviation);
    }

    let with_bias = NetworkSpec::mlp(&[4, 16, 16, 1])?;
    for gamma in [0.5, 2.0, 3.0] {
        let r = verify_geometric_scaling(&with_bias, gamma, 7)?;
        println!("gamma {gamma}: outputs x{:.3}, max rel deviation {:.2e}", r.factor, r.max_relative_deviation);
    }
    Ok(())
}
