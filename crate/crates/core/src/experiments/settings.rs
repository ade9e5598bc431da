//! Reading method hyperparameters from config sections.

use super::config::Config;
use crate::error::{Error, Result};
use crate::gp::VgpConfig;
use crate::inference::{HmcConfig, Schedule, SviConfig, TrainConfig};
use crate::nn::Temperature;

fn schedule(c: &Config, section: &str, default: Schedule) -> Result<Schedule> {
    match c.raw(section, "schedule") {
        None => Ok(default),
        Some("cosine") => Ok(Schedule::Cosine),
        Some("constant_then_decay") => Ok(Schedule::ConstantThenDecay {
            final_ratio: c.get_or(section, "final_ratio", 0.01)?,
        }),
        Some(other) => Err(Error::config(format!("{section}.schedule: unknown schedule {other:?}"))),
    }
}

pub fn train_config(c: &Config, section: &str, d: &TrainConfig) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        epochs: c.get_or(section, "epochs", d.epochs)?,
        batch_size: c.get_or(section, "batch_size", d.batch_size)?,
        lr: c.get_or(section, "lr", d.lr)?,
        momentum: c.get_or(section, "momentum", d.momentum)?,
        schedule: schedule(c, section, d.schedule)?,
        temperature: Temperature::new(c.get_or(section, "temperature", d.temperature.value())?)?,
        seed: d.seed,
        record_iterates: false,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn hmc_config(c: &Config, section: &str, d: &HmcConfig) -> Result<HmcConfig> {
    Ok(HmcConfig {
        burn_in: c.get_or(section, "burn_in", d.burn_in)?,
        n_samples: c.get_or(section, "samples", d.n_samples)?,
        step_size: c.get_or(section, "step_size", d.step_size)?,
        leapfrog_steps: c.get_or(section, "leapfrog_steps", d.leapfrog_steps)?,
        adapt: c.get_or(section, "adapt", d.adapt)?,
        target_accept: c.get_or(section, "target_accept", d.target_accept)?,
        jitter: c.get_or(section, "jitter", d.jitter)?,
        thin: c.get_or(section, "thin", d.thin)?,
        seed: d.seed,
    })
}

pub fn svi_config(c: &Config, section: &str, d: &SviConfig) -> Result<SviConfig> {
    Ok(SviConfig {
        steps: c.get_or(section, "steps", d.steps)?,
        lr: c.get_or(section, "lr", d.lr)?,
        mc_samples: c.get_or(section, "mc_samples", d.mc_samples)?,
        batch_size: c.get_or(section, "batch_size", d.batch_size)?,
        schedule: schedule(c, section, d.schedule)?,
        init_log_std: c.get_or(section, "init_log_std", d.init_log_std)?,
        seed: d.seed,
    })
}

pub fn vgp_config(c: &Config, section: &str, d: &VgpConfig) -> Result<VgpConfig> {
    Ok(VgpConfig {
        steps: c.get_or(section, "steps", d.steps)?,
        lr: c.get_or(section, "lr", d.lr)?,
        schedule: schedule(c, section, d.schedule)?,
        init_log_std: c.get_or(section, "init_log_std", d.init_log_std)?,
    })
}
