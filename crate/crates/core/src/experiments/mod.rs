//! Reproducible experiment harness.

mod commands;
mod common;
mod config;
mod double_descent;
mod mnist;
mod output;
mod prior_study;
mod rethink;
mod settings;
mod shift;
mod temper;
mod toy;

pub use commands::{run_command, Command};
pub use common::Scores;
pub use config::{Config, ExperimentConfig};
pub use double_descent::{run_double_descent, DoubleDescentResult, DoubleDescentRow, DoubleDescentSettings};
pub use mnist::{bundled_mnist, load_mnist, split_by_class};
pub use prior_study::{interpolation_path, run_prior_study, PathTrace, PriorStudyResult, PriorStudySettings};
pub use output::{stage, RunOutput, Table};
pub use rethink::{run_rethink, RethinkResult, RethinkRow, RethinkSettings};
pub use settings::{hmc_config, svi_config, train_config, vgp_config};
pub use shift::{run_shift_eval, ShiftResult, ShiftRow, ShiftSettings};
pub use temper::{run_temper_sweep, AdaptivityRow, TemperMethod, TemperResult, TemperRow, TemperSettings};
pub use toy::{run_toy_bma, ToyBmaResult, ToyBmaSettings, W1Point};
