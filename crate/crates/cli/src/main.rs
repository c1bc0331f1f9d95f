//! `resforge`: fit resonator traces, Kerr maps and field campaigns, generate
//! synthetic data, and evaluate the film/geometry estimate chain.
//!
//! Exit codes: 0 success, 1 input or processing error, 2 QC or physics
//! rejection. Results go to stdout (or `--output`), diagnostics to stderr.

mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;
use settings::Settings;

#[derive(Parser, Debug)]
#[command(
    name = "resforge",
    version,
    about = "Superconducting hanger resonator analysis"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Precedence: flag, then `RESFORGE_*`
/// environment variable, then the `--config` file.
#[derive(Args, Debug)]
struct CommonArgs {
    /// Output format.
    #[arg(long, global = true, env = "RESFORGE_FORMAT", value_enum)]
    format: Option<Format>,
    /// Seed for synthetic data; overrides document seeds.
    #[arg(long, global = true, env = "RESFORGE_SEED")]
    seed: Option<u64>,
    /// Write the primary output here instead of stdout (a directory for `synth`).
    #[arg(long, short, global = true, env = "RESFORGE_OUTPUT")]
    output: Option<PathBuf>,
    /// More diagnostics on stderr; repeat for more.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// TOML file with defaults for the flags above and `max_std_error`.
    #[arg(long, global = true, env = "RESFORGE_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the linear hanger model to one trace file.
    FitTrace(commands::fit_trace::FitTraceArgs),
    /// Fit the self-Kerr coefficient to a directory of traces at several powers.
    Kerr(commands::kerr::KerrArgs),
    /// Run a field-sweep campaign (simulated or replayed) and report.
    Field(commands::field::FieldArgs),
    /// Generate synthetic traces, power maps or field sweeps with a truth sidecar.
    Synth(commands::synth::SynthArgs),
    /// Evaluate the film and geometry estimate chain.
    Estimate(commands::estimate::EstimateArgs),
}

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accepted,
    Rejected,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_verbose = std::env::var("RESFORGE_VERBOSE")
        .ok()
        .and_then(|v| v.parse().ok());
    let settings = match Settings::resolve(
        cli.common.format,
        cli.common.seed,
        cli.common.output,
        (cli.common.verbose > 0)
            .then_some(cli.common.verbose)
            .or(env_verbose),
        cli.common.config.as_deref(),
    ) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let level = match settings.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();

    let result = match &cli.command {
        Command::FitTrace(a) => commands::fit_trace::run(a, &settings),
        Command::Kerr(a) => commands::kerr::run(a, &settings),
        Command::Field(a) => commands::field::run(a, &settings),
        Command::Synth(a) => commands::synth::run(a, &settings),
        Command::Estimate(a) => commands::estimate::run(a, &settings),
    };
    match result {
        Ok(Outcome::Accepted) => ExitCode::SUCCESS,
        Ok(Outcome::Rejected) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
