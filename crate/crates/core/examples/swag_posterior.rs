//! Fit SWAG to the toy regression problem, store the posterior in the
//! binary container, reload it and report a predictive band.
//!
//! Run with `cargo run --release --example swag_posterior`.

use bma_forge::data::gen_toy_regression;
use bma_forge::inference::{fit_swag, read_posterior, write_posterior, PosteriorApprox, Schedule, TrainConfig};
use bma_forge::metrics::{predictive_band, predictive_samples, BandMode};
use bma_forge::nn::LikelihoodSpec;
use bma_forge::priors::PriorSpec;

fn main() -> bma_forge::Result<()> {
    let toy = gen_toy_regression(0)?;
    let lik = LikelihoodSpec::gaussian(0.01)?;
    let prior = PriorSpec::isotropic(&toy.spec, 1.0)?;
    let train = TrainConfig {
        epochs: 4000,
        batch_size: 20,
        lr: 2e-7,
        schedule: Schedule::ConstantThenDecay { final_ratio: 0.3 },
        ..TrainConfig::default()
    };
    let fit = fit_swag(&toy.spec, &toy.train, &lik, &prior, &train, 2000, 10)?;
    println!("final loss {:.2}", fit.loss_trace.last().copied().unwrap_or(f64::NAN));

    let path = std::env::temp_dir().join("toy_swag.bin");
    write_posterior(&path, &PosteriorApprox::Swag(fit.swag))?;
    let posterior = read_posterior(&path)?;
    println!("stored {} ({} bytes)", posterior.tag(), std::fs::metadata(&path)?.len());

    let pred = predictive_samples(&toy.spec, &posterior, &toy.grid, 200, 1, &lik)?;
    let band = predictive_band(&pred, BandMode::Gaussian { k: 2.0, include_noise: false })?;
    let truth = toy.grid_truth()?;
    println!("{:>6} {:>8} {:>8} {:>8}", "x", "truth", "mean", "±2σ");
    for i in (0..toy.grid_x.len()).step_by(toy.grid_x.len() / 12) {
        let half = 0.5 * (band.upper[i] - band.lower[i]);
        println!("{:>6.2} {:>8.3} {:>8.3} {:>8.3}", toy.grid_x[i], truth[i], band.mean[i], half);
    }
    Ok(())
}
