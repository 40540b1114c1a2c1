//! Command-line front end for the counter-traffic anomaly pipeline.
//!
//! Exit codes are a stable contract: 0 success, 2 usage or configuration
//! problems, 3 I/O failures, 4 numeric failures (training divergence and
//! the like). Alarms found by `detect` are data, not failures.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::{CmdError, RunOutcome};

#[derive(Parser)]
#[command(name = "mibwatch", version, about = "Traffic anomaly detection over SNMP counter datasets")]
pub struct Cli {
    /// Override the seed used by the subcommand (scenario seed for
    /// simulate, weight initialization seed for train).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Suppress informational output.
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Write a JSON run manifest to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic counter dataset (CSV).
    Simulate {
        /// Bundled scenario: paper-shape or smoke.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Scenario config file (key = value lines plus [attack] blocks).
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Output CSV path.
        #[arg(short = 'o', long = "out", value_name = "PATH")]
        out: PathBuf,
    },
    /// Train the predictor on the Normal-labeled records of a dataset.
    Train {
        /// Input dataset CSV.
        data: PathBuf,
        /// Output model path.
        #[arg(short = 'o', long = "out", value_name = "PATH")]
        out: PathBuf,
        /// Variable to predict.
        #[arg(long, default_value = "ifInOctets")]
        target: String,
        /// Autoregressive lag count.
        #[arg(long, default_value_t = 8)]
        na: usize,
        /// Exogenous lag count.
        #[arg(long, default_value_t = 0)]
        nb: usize,
        /// Exogenous input delay.
        #[arg(long, default_value_t = 1)]
        nk: usize,
        /// Exogenous variable (required when nb > 0).
        #[arg(long)]
        exogenous: Option<String>,
        /// Training epochs.
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0.9)]
        momentum: f64,
        /// Weights start uniform in [-init-scale, init-scale].
        #[arg(long, default_value_t = 0.5)]
        init_scale: f64,
        /// Fraction of regression rows used for training; the rest are
        /// held out for the testing column of the report.
        #[arg(long, default_value_t = 0.7)]
        split: f64,
    },
    /// Predict a dataset, stream the residuals through the control
    /// chart, and write alarm and window-flag CSVs.
    Detect {
        /// Input dataset CSV.
        data: PathBuf,
        /// Trained model path.
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Variable to predict (must match training).
        #[arg(long, default_value = "ifInOctets")]
        target: String,
        /// Control-limit distance in standard deviations.
        #[arg(long, default_value_t = 3.0)]
        k: f64,
        /// Samples per learning/testing window.
        #[arg(long, default_value_t = 9)]
        window_size: usize,
        /// Baseline advancement policy: clean-only or always.
        #[arg(long, default_value = "clean-only")]
        baseline_update: String,
        /// Output path for the alarm log CSV.
        #[arg(long, value_name = "PATH", default_value = "alarms.csv")]
        alarms_out: PathBuf,
        /// Output path for the per-window flag CSV.
        #[arg(long, value_name = "PATH", default_value = "flags.csv")]
        flags_out: PathBuf,
    },
    /// Score window flags against a labeled dataset.
    Evaluate {
        /// Window flag CSV written by detect.
        flags: PathBuf,
        /// The labeled dataset the flags were computed from.
        data: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Train { .. } => "train",
            Command::Detect { .. } => "detect",
            Command::Evaluate { .. } => "evaluate",
        }
    }
}

fn run(cli: &Cli) -> Result<RunOutcome, CmdError> {
    match &cli.command {
        Command::Simulate {
            preset,
            config,
            out,
        } => commands::simulate(preset.as_deref(), config.as_deref(), out, cli.seed, cli.quiet),
        Command::Train {
            data,
            out,
            target,
            na,
            nb,
            nk,
            exogenous,
            iterations,
            learning_rate,
            momentum,
            init_scale,
            split,
        } => commands::train(commands::TrainArgs {
            data,
            out,
            target,
            na: *na,
            nb: *nb,
            nk: *nk,
            exogenous: exogenous.as_deref(),
            iterations: *iterations,
            learning_rate: *learning_rate,
            momentum: *momentum,
            init_scale: *init_scale,
            split: *split,
            seed: cli.seed.unwrap_or(42),
            quiet: cli.quiet,
        }),
        Command::Detect {
            data,
            model,
            target,
            k,
            window_size,
            baseline_update,
            alarms_out,
            flags_out,
        } => commands::detect(commands::DetectArgs {
            data,
            model,
            target,
            k: *k,
            window_size: *window_size,
            baseline_update,
            alarms_out,
            flags_out,
            quiet: cli.quiet,
        }),
        Command::Evaluate { flags, data } => commands::evaluate(flags, data, cli.quiet),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli) {
        Ok(outcome) => {
            if let Some(path) = &cli.manifest {
                let result = manifest::write(
                    path,
                    cli.command.name(),
                    &outcome,
                    started.elapsed().as_millis(),
                );
                if let Err(e) = result {
                    eprintln!("error: cannot write manifest: {e}");
                    return ExitCode::from(3);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
