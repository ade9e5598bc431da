//! Compare BMA approximations against an HMC reference on the toy
//! regression problem, measured by the Wasserstein distance between
//! predictive distributions.
//!
//! Run with `cargo run --release --example toy_bma [config]`. Defaults to the
//! smoke config; pass `configs/toy-bma.cfg` for the full study.

use bma_forge::experiments::{run_toy_bma, ExperimentConfig, ToyBmaSettings};

fn main() -> bma_forge::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke/toy-bma.cfg").into());
    let cfg = ExperimentConfig::load(&path)?;
    let settings = ToyBmaSettings::from_config(&cfg.settings)?;
    let seed = cfg.seeds[0];
    let res = run_toy_bma(&settings, seed)?;

    println!("seed {seed}, HMC acceptance {:.3}", res.hmc_acceptance);
    println!("{:<14} {:>6} {:>10}", "method", "budget", "W1");
    for p in &res.table {
        println!("{:<14} {:>6} {:>10.5}", p.method, p.budget, p.w1);
    }
    Ok(())
}
