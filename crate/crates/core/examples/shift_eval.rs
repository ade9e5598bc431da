//! Calibration of deep ensembles, MultiSWA and MultiSWAG as test images are
//! corrupted with increasing noise or translation.
//!
//! Run with `cargo run --release --example shift_eval [config]`.

use bma_forge::experiments::{bundled_mnist, run_shift_eval, ExperimentConfig, ShiftSettings};

fn main() -> bma_forge::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke/shift-eval.cfg").into());
    let cfg = ExperimentConfig::load(&path)?;
    let settings = ShiftSettings::from_config(&cfg.settings)?;
    let res = run_shift_eval(&settings, &bundled_mnist()?, cfg.seeds[0])?;

    println!("{:<14} {:<16} {:>5} {:>6} {:>8} {:>8}", "method", "shift", "level", "models", "nll", "acc");
    for r in res.rows.iter().filter(|r| r.models == settings.models) {
        println!(
            "{:<14} {:<16} {:>5} {:>6} {:>8.3} {:>8.3}",
            r.method,
            format!("{:?}", r.kind),
            r.level,
            r.models,
            r.scores.nll,
            r.scores.accuracy
        );
    }
    Ok(())
}
