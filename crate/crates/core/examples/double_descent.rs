//! Test error across network widths on label-corrupted MNIST for SGD, SWAG
//! and MultiSWAG.
//!
//! Run with `cargo run --release --example double_descent [config]`.

use bma_forge::experiments::{bundled_mnist, run_double_descent, DoubleDescentSettings, ExperimentConfig};

fn main() -> bma_forge::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke/double-descent.cfg").into());
    let cfg = ExperimentConfig::load(&path)?;
    let settings = DoubleDescentSettings::from_config(&cfg.settings)?;
    let res = run_double_descent(&settings, &bundled_mnist()?, cfg.seeds[0])?;

    println!("{:<10} {:>6} {:>7} {:>7} {:>9} {:>9}", "method", "width", "params", "models", "test err", "nll");
    for r in &res.rows {
        println!(
            "{:<10} {:>6} {:>7} {:>7} {:>9.3} {:>9.3}",
            r.method, r.width, r.params, r.models, 1.0 - r.scores.accuracy, r.scores.nll
        );
    }
    Ok(())
}
