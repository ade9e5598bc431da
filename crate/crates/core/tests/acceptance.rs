//! Acceptance run: one pass/fail line per criterion, each with its time budget.
//!
//! The experiment criteria load their settings and seeds from the shipped
//! configs, so this exercises exactly what `bma-forge` runs by default.

mod common;

use std::time::{Duration, Instant};

use bma_forge::experiments::{
    DoubleDescentSettings, ExperimentConfig, PriorStudySettings, RethinkSettings, ToyBmaSettings,
};
use common::*;

fn shipped(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(config_dir().join(format!("{name}.cfg"))).unwrap()
}

struct Outcome {
    id: usize,
    name: &'static str,
    check: Check,
    elapsed: Duration,
    budget: Duration,
}

impl Outcome {
    fn passed(&self) -> bool {
        self.check.passed && self.elapsed <= self.budget
    }
}

fn timed(id: usize, name: &'static str, budget_secs: u64, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let check = f();
    let out = Outcome {
        id,
        name,
        check,
        elapsed: start.elapsed(),
        budget: Duration::from_secs(budget_secs),
    };
    report(&out);
    out
}

fn report(o: &Outcome) {
    println!(
        "[{}] {:>2} {:<28} {:>8.1}s / {:>5}s  {}",
        if o.passed() { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.elapsed.as_secs_f64(),
        o.budget.as_secs(),
        o.check.detail
    );
}

fn main() {
    let filter: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |id: usize| filter.as_ref().is_none_or(|f| f.contains(&id));
    let mut outcomes = Vec::new();

    if wanted(1) {
        outcomes.push(timed(1, "prior output scaling", 10, || prior_scaling(100, 101)));
    }
    if wanted(2) {
        outcomes.push(timed(2, "gradient correctness", 30, || finite_difference_gradients(50, 102)));
    }
    if wanted(3) {
        outcomes.push(timed(3, "tempering equivalence", 5, || tempering_equivalence(200, 103)));
    }
    if wanted(4) {
        outcomes.push(timed(4, "SWAG sampler covariance", 30, || swag_covariance(100_000, 104)));
    }
    if wanted(5) {
        outcomes.push(timed(5, "HMC standard Gaussian", 60, || hmc_gaussian(10_000, 105)));
    }
    if wanted(6) {
        outcomes.push(timed(6, "SVI conjugate oracle", 60, || svi_conjugate(20_000, 106)));
    }
    if wanted(7) {
        outcomes.push(timed(7, "Wasserstein oracle", 10, || wasserstein_oracle(200, 107)));
    }

    if wanted(8) || wanted(9) {
        let cfg = shipped("toy-bma");
        let settings = ToyBmaSettings::from_config(&cfg.settings).unwrap();
        assert!(settings.hmc_chains >= 20 && settings.hmc.n_samples >= 200);
        let start = Instant::now();
        let runs = toy_runs(&settings, &cfg.seeds);
        let shared = start.elapsed();
        // The toy runs serve both criteria; each is charged the full time.
        for (id, name, check) in [
            (8, "toy BMA convergence trend", toy_ensemble_trend(&runs)),
            (9, "MultiSWAG vs deep ensembles", toy_multiswag(&runs)),
        ] {
            if wanted(id) {
                let o = Outcome { id, name, check, elapsed: shared, budget: Duration::from_secs(30 * 60) };
                report(&o);
                outcomes.push(o);
            }
        }
    }
    if wanted(10) {
        let cfg = shipped("rethink");
        let settings = RethinkSettings::from_config(&cfg.settings).unwrap();
        outcomes.push(timed(10, "rethinking generalization", 15 * 60, || rethink(&settings, &cfg.seeds)));
    }
    if wanted(11) {
        let cfg = shipped("prior-study");
        let settings = PriorStudySettings::from_config(&cfg.settings).unwrap();
        outcomes.push(timed(11, "prior class correlations", 10 * 60, || prior_correlations(&settings, &cfg.seeds)));
    }
    if wanted(12) {
        let cfg = shipped("double-descent");
        let settings = DoubleDescentSettings::from_config(&cfg.settings).unwrap();
        outcomes.push(timed(12, "double descent trend", 60 * 60, || double_descent(&settings, &cfg.seeds)));
    }
    if wanted(13) {
        outcomes.push(timed(13, "GP numerical core", 10, || gp_dense_oracle(&[1, 2, 5, 20, 50, 100, 200], 113)));
    }
    if wanted(14) {
        let dir = tempfile::tempdir().unwrap();
        outcomes.push(timed(14, "CLI reproducibility", 10 * 60, || cli_reproducible(dir.path())));
    }

    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.id).collect();
    println!("acceptance: {} passed, {} failed", outcomes.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
