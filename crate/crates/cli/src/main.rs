//! `ctp`: command-line front end for the gold/bitcoin trading model.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ctp_core::ErrorKind;

#[derive(Debug, Parser)]
#[command(name = "ctp", version, about = "Daily gold/bitcoin trading model and backtester")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fill calendar gaps in price files with the Hermite interpolant.
    Interpolate(InterpolateArgs),
    /// Fit the ARIMA model up to a date and forecast three days ahead.
    Forecast(ForecastArgs),
    /// Run the daily trading backtest.
    Backtest(BacktestArgs),
    /// Perturb a finished schedule or rerun with nudged parameters.
    Sensitivity(SensitivityArgs),
}

/// Price inputs, either listed in a config file or given directly.
#[derive(Debug, Args)]
struct DataArgs {
    /// Run configuration (flat key = value file).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Gold price CSV; overrides the config.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Bitcoin price CSV; overrides the config.
    #[arg(long)]
    btc: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InterpolateArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    btc: Option<PathBuf>,
    #[arg(long, default_value = "ctp-out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AssetArg {
    Gold,
    #[value(alias = "btc")]
    Bitcoin,
}

#[derive(Debug, Args)]
struct ForecastArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    asset: AssetArg,
    /// Last day of history used (YYYY-MM-DD).
    #[arg(long)]
    date: NaiveDate,
    /// `fixed N`, `adaptive [T0]` or `optimal`.
    #[arg(long, num_args = 1..=2, value_names = ["KIND", "DAYS"], default_values = ["adaptive"])]
    window: Vec<String>,
    /// Write ACF/PACF and fit diagnostics as CSV.
    #[arg(long)]
    diagnostics: bool,
    #[arg(long, default_value = "ctp-out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    Pso,
    Markowitz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PersonalityArg {
    Crazy,
    Stable,
    Middle,
}

/// Overrides for the backtest configuration.
#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    start: Option<NaiveDate>,
    #[arg(long)]
    end: Option<NaiveDate>,
    #[arg(long, value_enum)]
    personality: Option<PersonalityArg>,
    /// Swarm seed; overrides `CTP_SEED` and the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "pso")]
    baseline: Baseline,
    /// Evaluate swarm particles on all cores.
    #[arg(long)]
    parallel: bool,
}

#[derive(Debug, Args)]
struct BacktestArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "ctp-out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Randomly perturb the decisions of a finished run.
    Scheme,
    /// Rerun with V0, alpha or beta nudged.
    Params,
}

#[derive(Debug, Args)]
struct SensitivityArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[command(flatten)]
    run: RunArgs,
    /// Output directory of a previous `backtest` (scheme mode).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0.01)]
    rel_lo: f64,
    #[arg(long, default_value_t = 0.03)]
    rel_hi: f64,
    /// Nudge commission rates by absolute points instead of relatively.
    #[arg(long)]
    absolute_points: bool,
    #[arg(long, default_value = "ctp-out")]
    out: PathBuf,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Interpolate(a) => commands::interpolate(a, &argv),
        Command::Forecast(a) => commands::forecast(a, &argv),
        Command::Backtest(a) => commands::backtest(a, &argv),
        Command::Sensitivity(a) => commands::sensitivity(a, &argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
