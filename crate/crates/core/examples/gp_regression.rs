//! Exact GP regression on a noisy sine, with the log marginal likelihood
//! used to pick a lengthscale.
//!
//! Run with `cargo run --example gp_regression`.

use bma_forge::gp::{gp_fit, gp_log_marginal, gp_predict, RbfKernel};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> bma_forge::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let xs: Vec<f64> = (0..30).map(|i| -3.0 + 6.0 * i as f64 / 29.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x.sin() + noise.sample(&mut rng)).collect();
    let x = DMatrix::from_column_slice(xs.len(), 1, &xs);

    let mut best = (f64::NEG_INFINITY, 0.0);
    for ell in [0.1, 0.3, 1.0, 3.0, 10.0] {
        let model = gp_fit(&x, &ys, &RbfKernel::new(ell, 1.0)?, 0.01)?;
        let lml = gp_log_marginal(&model);
        println!("lengthscale {ell:>5}: log marginal {lml:>9.3}");
        if lml > best.0 {
            best = (lml, ell);
        }
    }

    let model = gp_fit(&x, &ys, &RbfKernel::new(best.1, 1.0)?, 0.01)?;
    let grid: Vec<f64> = (0..7).map(|i| -4.5 + 1.5 * i as f64).collect();
    let pred = gp_predict(&model, &DMatrix::from_column_slice(grid.len(), 1, &grid))?;
    println!("\nlengthscale {} selected", best.1);
    println!("{:>6} {:>8} {:>8} {:>8}", "x", "sin x", "mean", "std");
    for (i, g) in grid.iter().enumerate() {
        println!("{g:>6.2} {:>8.3} {:>8.3} {:>8.3}", g.sin(), pred.mean[i], pred.variance[i].sqrt());
    }
    Ok(())
}
