//! The six experiment commands: settings from config, one run per seed,
//! results staged into a [`RunOutput`].

use std::path::PathBuf;
use std::str::FromStr;

use serde_json::json;

use super::config::ExperimentConfig;
use super::double_descent::{run_double_descent, DoubleDescentSettings};
use super::mnist::load_mnist;
use super::output::{stage, RunOutput, Table};
use super::prior_study::{run_prior_study, PriorStudySettings};
use super::rethink::{run_rethink, RethinkSettings};
use super::shift::{run_shift_eval, ShiftSettings};
use super::temper::{run_temper_sweep, TemperSettings};
use super::toy::{run_toy_bma, ToyBmaSettings};
use crate::error::{Error, Result};
use crate::metrics::{predictive_band, BandMode};
use crate::row;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    ToyBma,
    PriorStudy,
    Rethink,
    DoubleDescent,
    TemperSweep,
    ShiftEval,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::ToyBma,
        Command::PriorStudy,
        Command::Rethink,
        Command::DoubleDescent,
        Command::TemperSweep,
        Command::ShiftEval,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::ToyBma => "toy-bma",
            Command::PriorStudy => "prior-study",
            Command::Rethink => "rethink",
            Command::DoubleDescent => "double-descent",
            Command::TemperSweep => "temper-sweep",
            Command::ShiftEval => "shift-eval",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config(format!("unknown command '{s}'")))
    }
}

/// Runs `command` for every configured seed and writes its files. On
/// failure the partial results go to `<out>/quarantine` and the stage error
/// is returned.
pub fn run_command(command: Command, config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let mut out = RunOutput::new(config);
    out.note("command", command.name());
    let outcome = match command {
        Command::ToyBma => toy_bma(config, &mut out),
        Command::PriorStudy => prior_study(config, &mut out),
        Command::Rethink => rethink(config, &mut out),
        Command::DoubleDescent => double_descent(config, &mut out),
        Command::TemperSweep => temper_sweep(config, &mut out),
        Command::ShiftEval => shift_eval(config, &mut out),
    };
    out.finish(outcome)
}

fn toy_bma(config: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let settings = ToyBmaSettings::from_config(&config.settings)?;
    config.settings.reject_unread()?;
    out.note("hmc_chains", settings.hmc_chains);
    out.note("swag_collect_start", settings.swag_collect_start);
    let mut predictive = Table::new(&["x", "mean", "lower", "upper"]);
    let mut curves = Table::new(&["x", "w1"]);
    let mut convergence = Table::new(&["budget", "w1"]);
    let mut hmc = Table::new(&["acceptance", "samples"]);
    let mut data = Table::new(&["x", "y"]);
    for &seed in &config.seeds {
        let r = stage(&format!("toy-bma seed {seed}"), run_toy_bma(&settings, seed))?;
        let ys = r.toy.train.targets.as_reals().expect("regression data");
        for (i, y) in ys.iter().enumerate() {
            data.push(seed, "data", row![r.toy.train.inputs[(i, 0)], y]);
        }
        let xs = &r.toy.grid_x;
        let band = BandMode::Quantile { lower: 0.025, upper: 0.975 };
        let all = std::iter::once(("hmc", &r.reference)).chain(r.predictives.iter().map(|(m, p)| (*m, p)));
        for (method, pred) in all {
            let b = predictive_band(pred, band)?;
            for (i, x) in xs.iter().enumerate() {
                predictive.push(seed, method, row![x, b.mean[i], b.lower[i], b.upper[i]]);
            }
        }
        for (method, report) in &r.curves {
            for (x, w) in xs.iter().zip(&report.per_location) {
                curves.push(seed, method, row![x, w]);
            }
        }
        for p in &r.table {
            convergence.push(seed, p.method, row![p.budget, p.w1]);
        }
        hmc.push(seed, "hmc", row![r.hmc_acceptance, r.reference.draws()]);
    }
    out.table("train_data.csv", &data);
    out.table("predictive.csv", &predictive);
    out.table("w1_curves.csv", &curves);
    out.table("w1_convergence.csv", &convergence);
    out.table("hmc.csv", &hmc);
    Ok(())
}

fn prior_study(config: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let settings = PriorStudySettings::from_config(&config.settings)?;
    let images = load_mnist(&config.settings)?;
    config.settings.reject_unread()?;
    let mut matrix = Table::new(&["alpha", "row", "col", "label_row", "label_col", "corr"]);
    let mut blocks = Table::new(&["alpha", "class_row", "class_col", "mean_corr"]);
    let mut summary = Table::new(&["alpha", "within_class", "cross_class", "within_exceeds_cross"]);
    let mut predictive = Table::new(&["alpha", "class", "mean_prob", "mean_max_class_prob"]);
    let mut paths = Table::new(&["alpha", "function", "t", "value", "label_start", "label_end"]);
    let mut decay = Table::new(&["kind", "level", "mean_corr", "std_corr"]);
    let mut rbf = Table::new(&["lengthscale"]);
    for &seed in &config.seeds {
        let r = stage(&format!("prior-study seed {seed}"), run_prior_study(&settings, &images, seed))?;
        for (alpha, d) in &r.diagrams {
            let n = d.labels.len();
            for i in 0..n {
                for j in 0..n {
                    matrix.push(seed, "bnn_prior", row![alpha, i, j, d.labels[i], d.labels[j], d.matrix[(i, j)]]);
                }
            }
            for (a, ca) in d.classes.iter().enumerate() {
                for (b, cb) in d.classes.iter().enumerate() {
                    blocks.push(seed, "bnn_prior", row![alpha, ca, cb, d.block_means[(a, b)]]);
                }
            }
            let (w, c) = (d.within_class_mean(), d.cross_class_mean());
            summary.push(seed, "bnn_prior", row![alpha, w, c, w > c]);
        }
        for (alpha, p) in &r.predictive {
            let max = p.per_sample.iter().map(|q| q.iter().copied().fold(0.0, f64::max)).sum::<f64>() / p.per_sample.len() as f64;
            for (c, v) in p.average.iter().enumerate() {
                predictive.push(seed, "bnn_prior", row![alpha, c, v, max]);
            }
        }
        for trace in &r.paths {
            for f in 0..trace.values.nrows() {
                for (k, t) in trace.t.iter().enumerate() {
                    paths.push(seed, "bnn_prior", row![trace.alpha, f, t, trace.values[(f, k)], r.path_labels.0, r.path_labels.1]);
                }
            }
        }
        for (kind, curves) in &r.decay {
            for c in curves {
                for (k, level) in c.intensities.iter().enumerate() {
                    decay.push(seed, c.model, row![kind.tag(), level, c.mean[k], c.std[k]]);
                }
            }
        }
        rbf.push(seed, "rbf", row![r.rbf_lengthscale]);
    }
    out.table("correlation_matrix.csv", &matrix);
    out.table("correlation_blocks.csv", &blocks);
    out.table("correlation_summary.csv", &summary);
    out.table("prior_predictive.csv", &predictive);
    out.table("interpolation.csv", &paths);
    out.table("perturbation_decay.csv", &decay);
    out.table("rbf_baseline.csv", &rbf);
    Ok(())
}

fn rethink(config: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let settings = RethinkSettings::from_config(&config.settings)?;
    let images = load_mnist(&config.settings)?;
    config.settings.reject_unread()?;
    out.note("fractions", settings.fractions.clone());
    out.note("gp_signal_var", settings.signal_var);
    let mut sweep = Table::new(&["fraction", "train_acc", "test_acc", "evidence"]);
    let mut kernels = Table::new(&["lengthscale", "chance_test_acc_se", "n_train", "n_test"]);
    for &seed in &config.seeds {
        let r = stage(&format!("rethink seed {seed}"), run_rethink(&settings, &images, seed))?;
        for row in &r.rows {
            sweep.push(seed, row.method, row![row.fraction, row.train_acc, row.test_acc, row.evidence]);
        }
        kernels.push(seed, "gp", row![r.lengthscale, "", r.n_train, r.n_test]);
        kernels.push(seed, "gp_small_lengthscale", row![r.small_lengthscale, r.chance_se, r.n_train, r.n_test]);
    }
    out.table("corruption_sweep.csv", &sweep);
    out.table("gp_kernels.csv", &kernels);
    Ok(())
}

fn double_descent(config: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let settings = DoubleDescentSettings::from_config(&config.settings)?;
    let images = load_mnist(&config.settings)?;
    config.settings.reject_unread()?;
    out.note("corruption", settings.corruption);
    out.note("width_multipliers", settings.multipliers.clone());
    let mut t = Table::new(&["multiplier", "width", "params", "models", "test_nll", "test_error", "ece"]);
    for &seed in &config.seeds {
        let r = stage(&format!("double-descent seed {seed}"), run_double_descent(&settings, &images, seed))?;
        for row in &r.rows {
            let s = row.scores;
            t.push(seed, row.method, row![row.multiplier, row.width, row.params, row.models, s.nll, 1.0 - s.accuracy, s.ece]);
        }
    }
    out.table("double_descent.csv", &t);
    Ok(())
}

fn temper_sweep(config: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let settings = TemperSettings::from_config(&config.settings)?;
    let images = load_mnist(&config.settings)?;
    config.settings.reject_unread()?;
    out.note("temperatures", settings.temperatures.clone());
    let mut t = Table::new(&["temperature", "test_nll", "test_acc", "ece", "equivalence_max_diff", "baseline_identical"]);
    let mut adapt = Table::new(&["n_train", "mean_max_class_prob", "mean_entropy"]);
    for &seed in &config.seeds {
        let r = stage(&format!("temper-sweep seed {seed}"), run_temper_sweep(&settings, &images, seed))?;
        if !r.baseline_identical {
            return Err(Error::numerical(format!("seed {seed}: the T = 1 run differs from the untempered baseline")));
        }
        for row in &r.rows {
            let s = row.scores;
            let identical = row.temperature == 1.0;
            t.push(seed, r.method.tag(), row![row.temperature, s.nll, s.accuracy, s.ece, row.equivalence_max_diff, identical]);
        }
        for a in &r.adaptivity {
            let method = if a.n == 0 { "prior" } else { "sgld" };
            adapt.push(seed, method, row![a.n, a.mean_max_class_prob, a.mean_entropy]);
        }
    }
    out.table("temper_sweep.csv", &t);
    if !adapt.is_empty() {
        out.table("prior_adaptivity.csv", &adapt);
    }
    Ok(())
}

fn shift_eval(config: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let settings = ShiftSettings::from_config(&config.settings)?;
    let images = load_mnist(&config.settings)?;
    config.settings.reject_unread()?;
    out.note("models", settings.models);
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        let r = stage(&format!("shift-eval seed {seed}"), run_shift_eval(&settings, &images, seed))?;
        for row in &r.rows {
            rows.push(json!({
                "seed": seed,
                "method": row.method,
                "kind": row.kind.tag(),
                "level": row.level,
                "models": row.models,
                "nll": row.scores.nll,
                "accuracy": row.scores.accuracy,
                "ece": row.scores.ece,
            }));
        }
    }
    out.json_lines("shift_eval.jsonl", rows)
}
