//! Batch CLI for outage analysis of a relay-assisted two-tier mmWave cell.
//!
//! Reads a flat `key = value` experiment configuration, runs the requested
//! analysis or simulation, writes CSV (or a plain-text report) to stdout or
//! `--out`. Exit codes: 0 success, 1 validation-gate failure, 2 config
//! error, 3 numerical non-convergence.

mod commands;
mod config;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::CliError;
use config::{ExperimentConfig, RangeSpec};

#[derive(Parser)]
#[command(
    name = "jsdm-outage",
    version,
    about = "Outage probability of a relay-assisted two-tier mmWave cell"
)]
struct Cli {
    /// Path to a key = value experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the configured number of simulated drops.
    #[arg(long, global = true)]
    drops: Option<u64>,
    /// Override the threshold grid, "start:stop:step" in dB.
    #[arg(long, global = true, allow_hyphen_values = true)]
    thresholds: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum SweepVar {
    /// Relay distance d_ms (relay disk radius scales along).
    Dms,
    /// Antenna count M.
    Antennas,
    /// Association rule: relay disk vs weighted path loss (simulated).
    Strategy,
}

#[derive(Subcommand)]
enum Command {
    /// Outage vs threshold: analytic, noise-limited, simulated, relay-free.
    Curve,
    /// One-variable experiment sweeps.
    Sweep {
        #[arg(long, value_enum)]
        var: SweepVar,
    },
    /// Closed-form association quantities of the relay's group.
    Assoc,
    /// Analytic-vs-simulation gate with per-threshold z-scores.
    Validate {
        /// Largest tolerated |analytic − simulated| outage gap.
        #[arg(long, default_value_t = 0.03)]
        tolerance: f64,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(CliError::Config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(drops) = cli.drops {
        cfg.drops = drops;
    }
    if let Some(spec) = &cli.thresholds {
        cfg.thresholds_db =
            RangeSpec::parse(spec).map_err(|e| CliError::Config(format!("--thresholds: {e}")))?;
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let mut buffer = Vec::new();
    match cli.command {
        Command::Curve => commands::cmd_curve(&cfg, &mut buffer),
        Command::Sweep { var: SweepVar::Dms } => commands::cmd_sweep_dms(&cfg, &mut buffer),
        Command::Sweep { var: SweepVar::Antennas } => {
            commands::cmd_sweep_antennas(&cfg, &mut buffer)
        }
        Command::Sweep { var: SweepVar::Strategy } => {
            commands::cmd_sweep_strategy(&cfg, &mut buffer)
        }
        Command::Assoc => commands::cmd_assoc(&cfg, &mut buffer),
        Command::Validate { tolerance } => commands::cmd_validate(&cfg, tolerance, &mut buffer),
    }
    // A failed gate still reports what it measured before exiting nonzero.
    .map_err(|e| {
        let _ = emit(cli, &buffer);
        e
    })?;
    emit(cli, &buffer)
}

fn emit(cli: &Cli, buffer: &[u8]) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => fs::write(path, buffer)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
        None => {
            io::stdout().write_all(buffer)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("JSDM_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("config error: JSDM_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
