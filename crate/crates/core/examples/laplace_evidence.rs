//! Diagonal Laplace evidence for a small regression net across prior scales.
//!
//! Run with `cargo run --release --example laplace_evidence`.

use bma_forge::data::gen_toy_regression;
use bma_forge::inference::{laplace_log_marginal, train_map, Curvature, TrainConfig};
use bma_forge::nn::LikelihoodSpec;
use bma_forge::priors::PriorSpec;

fn main() -> bma_forge::Result<()> {
    let toy = gen_toy_regression(1)?;
    let lik = LikelihoodSpec::gaussian(0.01)?;
    let train = TrainConfig { epochs: 1500, batch_size: 20, lr: 2e-7, ..TrainConfig::default() };

    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "alpha", "log Z", "log lik", "log prior", "occam");
    for alpha in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let prior = PriorSpec::isotropic(&toy.spec, alpha)?;
        let map = train_map(&toy.spec, &toy.train, &lik, &prior, &train)?;
        let z = laplace_log_marginal(&toy.spec, &map.params, &toy.train, &lik, &prior, Curvature::ExpectedFisher)?;
        println!(
            "{alpha:>6} {:>12.2} {:>12.2} {:>12.2} {:>10.2}",
            z.log_marginal, z.log_likelihood, z.log_prior, z.occam
        );
    }
    Ok(())
}
