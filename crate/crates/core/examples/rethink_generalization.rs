//! GPs and Bayesian nets fit randomly relabelled data, yet their marginal
//! likelihood ranks the true labels above the noise.
//!
//! Run with `cargo run --release --example rethink_generalization [config]`.

use bma_forge::experiments::{bundled_mnist, run_rethink, ExperimentConfig, RethinkSettings};

fn main() -> bma_forge::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke/rethink.cfg").into());
    let cfg = ExperimentConfig::load(&path)?;
    let settings = RethinkSettings::from_config(&cfg.settings)?;
    let res = run_rethink(&settings, &bundled_mnist()?, cfg.seeds[0])?;

    println!("{} train, {} test, chance s.e. {:.3}", res.n_train, res.n_test, res.chance_se);
    println!("{:<20} {:>9} {:>9} {:>9} {:>12}", "method", "corrupt", "train acc", "test acc", "evidence");
    for r in &res.rows {
        println!("{:<20} {:>9.2} {:>9.3} {:>9.3} {:>12.2}", r.method, r.fraction, r.train_acc, r.test_acc, r.evidence);
    }
    Ok(())
}
