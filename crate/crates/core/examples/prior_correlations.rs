//! Prior-induced correlations between logits of MNIST digits, and how they
//! depend on the prior scale.
//!
//! Run with `cargo run --release --example prior_correlations [config]`.

use bma_forge::experiments::{bundled_mnist, run_prior_study, ExperimentConfig, PriorStudySettings};

fn main() -> bma_forge::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke/prior-study.cfg").into());
    let cfg = ExperimentConfig::load(&path)?;
    let settings = PriorStudySettings::from_config(&cfg.settings)?;
    let res = run_prior_study(&settings, &bundled_mnist()?, cfg.seeds[0])?;

    println!("{:>8} {:>12} {:>12}", "alpha", "same class", "cross class");
    for (alpha, d) in &res.diagrams {
        println!("{alpha:>8} {:>12.4} {:>12.4}", d.within_class_mean(), d.cross_class_mean());
    }
    println!("\nprior predictive class balance");
    for (alpha, p) in &res.predictive {
        let max = p.per_sample.iter().map(|s| s.iter().cloned().fold(0.0, f64::max)).sum::<f64>() / p.per_sample.len() as f64;
        println!("alpha {alpha:>8.4}: mean largest class probability {max:.3}");
    }
    Ok(())
}
