//! Command-line front end for the memristive OFDM experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use memcomm::frontend::Medium;
use memcomm::harness::{run, Experiment, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "memcomm", version, about = "Memristive crossbar OFDM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-link 480-bit text transfer.
    Demo480(Common),
    /// 2x2 MIMO transfer of 224 bits through a fused receiver array.
    Mimo224(Common),
    /// Bit error rate against programming error.
    BerSweep(Common),
    /// Digitization and crossbar energy figures.
    Energy(Common),
    /// Transmit and receive constellations.
    Constellation(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Relative programming error, e.g. 0.0118.
    #[arg(long)]
    programming_error: Option<f64>,
    /// Channel SNR in dB; omit for a noiseless channel.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    medium: Option<Medium>,
    /// Encode the payload as 7-bit ASCII.
    #[arg(long)]
    seven_bit: bool,
    /// Output directory for the report and data files.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self, experiment: Experiment) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_toml(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig::new(experiment),
        };
        cfg.experiment = experiment;
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.programming_error {
            cfg.programming_error = v;
        }
        if self.snr_db.is_some() {
            cfg.snr_db = self.snr_db;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.medium {
            cfg.medium = v;
        }
        if self.seven_bit {
            cfg.seven_bit = true;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.display().to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let (experiment, common) = match &cli.command {
        Command::Demo480(c) => (Experiment::Demo480, c),
        Command::Mimo224(c) => (Experiment::Mimo224, c),
        Command::BerSweep(c) => (Experiment::BerSweep, c),
        Command::Energy(c) => (Experiment::EnergyReport, c),
        Command::Constellation(c) => (Experiment::Constellation, c),
    };
    let cfg = common.resolve(experiment)?;
    let output = run(&cfg)?;
    if let Some(dir) = &cfg.out {
        output
            .write_to(std::path::Path::new(dir))
            .with_context(|| format!("writing outputs to {dir}"))?;
    }
    print!("{}", output.report);
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
