//! Posterior tempering sweep, plus how strongly the posterior predictive
//! departs from the prior's class imbalance as data grows.
//!
//! Run with `cargo run --release --example tempering [config]`.

use bma_forge::experiments::{bundled_mnist, run_temper_sweep, ExperimentConfig, TemperSettings};

fn main() -> bma_forge::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke/temper-sweep.cfg").into());
    let cfg = ExperimentConfig::load(&path)?;
    let settings = TemperSettings::from_config(&cfg.settings)?;
    let res = run_temper_sweep(&settings, &bundled_mnist()?, cfg.seeds[0])?;

    println!("method {:?}, T = 1 matches untempered run: {}", res.method, res.baseline_identical);
    println!("{:>6} {:>8} {:>8} {:>8} {:>12}", "T", "nll", "acc", "ece", "vs powered");
    for r in &res.rows {
        println!(
            "{:>6} {:>8.3} {:>8.3} {:>8.3} {:>12.1e}",
            r.temperature, r.scores.nll, r.scores.accuracy, r.scores.ece, r.equivalence_max_diff
        );
    }
    for a in &res.adaptivity {
        println!("n = {:>5}: largest class probability {:.3}, entropy {:.3}", a.n, a.mean_max_class_prob, a.mean_entropy);
    }
    Ok(())
}
