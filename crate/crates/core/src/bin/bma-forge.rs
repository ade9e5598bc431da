use std::path::PathBuf;
use std::process::ExitCode;

use bma_forge::experiments::{run_command, Command, ExperimentConfig};
use bma_forge::{Error, Result};
use clap::Parser;

/// Run a reproducible experiment from a config file.
#[derive(Parser, Debug)]
#[command(name = "bma-forge", version)]
struct Cli {
    /// toy-bma, prior-study, rethink, double-descent, temper-sweep or shift-eval
    command: String,
    /// Experiment config (key = value lines with [section] headers)
    config: PathBuf,
    /// Run this single seed instead of the configured list
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides experiment.out)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_workers() -> Result<()> {
    let Ok(raw) = std::env::var("BMA_FORGE_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("BMA_FORGE_WORKERS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_workers()?;
    let command: Command = cli.command.parse()?;
    let mut config = ExperimentConfig::load(&cli.config).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", cli.config.display()))),
        other => other,
    })?;
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    if let Some(out) = cli.out {
        config = config.with_out_dir(out);
    }
    let files = run_command(command, &config)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
