use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::dataset::{Dataset, Provenance, Split};
use crate::error::Result;
use crate::nn::{forward, NetworkSpec, ParamVector};
use crate::priors::{sample_params, PriorSpec};
use crate::rng;

/// Layout of the synthetic regression problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyRegressionConfig {
    /// Input intervals, each receiving `points_per_cluster` uniform draws.
    pub clusters: Vec<(f64, f64)>,
    pub points_per_cluster: usize,
    /// Standard deviation of the generator network's weights and biases.
    pub weight_std: f64,
    /// Standard deviation of the additive observation noise.
    pub noise_std: f64,
    /// Dense evaluation grid `[lo, hi]` with `grid_points` points.
    pub grid: (f64, f64),
    pub grid_points: usize,
    pub hidden: Vec<usize>,
}

impl Default for ToyRegressionConfig {
    fn default() -> Self {
        ToyRegressionConfig {
            clusters: vec![(-4.0, -2.0), (-0.5, 0.5), (2.0, 4.0)],
            points_per_cluster: 40,
            weight_std: 0.1,
            noise_std: 0.1,
            grid: (-6.0, 6.0),
            grid_points: 121,
            hidden: vec![10, 10, 10],
        }
    }
}

/// Generated toy data together with the generator that produced it.
#[derive(Debug, Clone)]
pub struct ToyRegression {
    pub train: Dataset,
    /// Raw scalar inputs of the dense grid.
    pub grid_x: Vec<f64>,
    /// Grid features `(x, x²)`, one row per grid point.
    pub grid: DMatrix<f64>,
    pub spec: NetworkSpec,
    pub generator: ParamVector,
}

impl ToyRegression {
    /// Noise-free generator output on the grid.
    pub fn grid_truth(&self) -> Result<Vec<f64>> {
        Ok(forward(&self.spec, &self.generator, &self.grid)?.iter().copied().collect())
    }
}

/// `(x, x²)` feature rows.
pub fn toy_features(xs: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { xs[i] } else { xs[i] * xs[i] })
}

impl ToyRegressionConfig {
    pub fn network(&self) -> NetworkSpec {
        let mut sizes = vec![2];
        sizes.extend(&self.hidden);
        sizes.push(1);
        NetworkSpec::mlp(&sizes).expect("toy network sizes are positive")
    }

    pub fn generate(&self, seed: u64) -> Result<ToyRegression> {
        let spec = self.network();
        let generator = sample_params(&spec, &PriorSpec::isotropic(&spec, self.weight_std)?, rng::substream(seed, 1))?;
        let mut rng = rng::seeded(rng::substream(seed, 2));
        let mut xs = Vec::with_capacity(self.clusters.len() * self.points_per_cluster);
        for &(lo, hi) in &self.clusters {
            for _ in 0..self.points_per_cluster {
                xs.push(rng.random_range(lo..=hi));
            }
        }
        let features = toy_features(&xs);
        let clean = forward(&spec, &generator, &features)?;
        let ys = clean
            .iter()
            .map(|f| {
                let z: f64 = StandardNormal.sample(&mut rng);
                f + self.noise_std * z
            })
            .collect();
        let provenance = Provenance::new("toy_regression", Some(seed))
            .with("clusters", format!("{:?}", self.clusters))
            .with("points_per_cluster", self.points_per_cluster)
            .with("weight_std", self.weight_std)
            .with("noise_std", self.noise_std);
        let train = Dataset::regression(features, ys, Split::Train, provenance)?;
        let (lo, hi) = self.grid;
        let m = self.grid_points.max(2);
        let grid_x: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
        Ok(ToyRegression {
            train,
            grid: toy_features(&grid_x),
            grid_x,
            spec,
            generator,
        })
    }
}

/// 120 noisy points in three clusters from a random `[2,10,10,10,1]` network.
pub fn gen_toy_regression(seed: u64) -> Result<ToyRegression> {
    ToyRegressionConfig::default().generate(seed)
}
