//! `epps`: simulate the asynchronous sampling model, measure Epps curves,
//! and compare them with the decomposition formula and the exact solution.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "epps", version, about, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate two asynchronously sampled prices and write their ticks.
    Simulate(SimulateArgs),
    /// Measure the Epps curve from tick files or a fresh simulation.
    Epps(AnalysisArgs),
    /// Compare measured correlations with the decomposition prediction.
    Decompose(DecomposeArgs),
    /// Closed-form correlation and ratios of the sampling model.
    Exact(ExactArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Base sampling interval in seconds [default: 1 for simulations, 120 for tick files].
    #[arg(long)]
    pub dt0: Option<u64>,
    /// Comma-separated sampling intervals in seconds.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub dt_grid: Option<Vec<u64>>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "epps-out")]
    pub out: PathBuf,
    /// Flat `key = value` file with the same keys as the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Poisson sampling rate in events per second; fractions like 1/60 work.
    #[arg(long, value_parser = parse_rate, default_value = "1/60")]
    pub lambda: f64,
    /// Simulated seconds.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: u64,
    /// Starting level of the walk.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub w0: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TickFormat {
    /// `time_s,log_price` over the whole horizon.
    Log,
    /// `date,time_s,price` trade files, one simulated session per day.
    Taq,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = TickFormat::Log)]
    pub format: TickFormat,
    /// Number of trading days for `--format taq`.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub days: u64,
    /// First trading day for `--format taq`.
    #[arg(long, default_value = "2024-01-02")]
    pub start_date: NaiveDate,
}

#[derive(Args, Debug, Clone)]
pub struct TickArgs {
    /// Trade file of instrument A (`date,time_s,price`). Without tick files
    /// the model is simulated instead.
    #[arg(long, requires = "ticks_b")]
    pub ticks_a: Option<PathBuf>,
    /// Trade file of instrument B.
    #[arg(long, requires = "ticks_a")]
    pub ticks_b: Option<PathBuf>,
    /// Restrict tick-file analysis to these dates.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub days: Option<Vec<NaiveDate>>,
    /// Session open, seconds since midnight.
    #[arg(long, default_value_t = 34_200.0)]
    pub session_start: f64,
    /// Session close, seconds since midnight.
    #[arg(long, default_value_t = 57_600.0)]
    pub session_end: f64,
    /// Tick-to-tick moves above this fraction of the price are dropped.
    #[arg(long, default_value_t = 0.05)]
    pub split_fraction: f64,
    /// Longest decay-function lag per day, in units of dt0.
    #[arg(long, default_value_t = 30)]
    pub max_lag: usize,
}

#[derive(Args, Debug)]
pub struct AnalysisArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub ticks: TickArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DecayMode {
    /// Decay functions as measured.
    Raw,
    /// Tails cut where each decay first reaches zero.
    Truncated,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// [default: truncated for tick files, raw for simulations]
    #[arg(long, value_enum)]
    pub decay: Option<DecayMode>,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_rate, default_value = "1/60")]
    pub lambda: f64,
}

fn parse_rate(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|e| format!("{e}"))?;
            let d: f64 = d.trim().parse().map_err(|e| format!("{e}"))?;
            n / d
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("rate must be positive and finite, got {s}"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match config::splice_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn rates_accept_fractions() {
        assert_eq!(parse_rate("1/60").unwrap(), 1.0 / 60.0);
        assert_eq!(parse_rate("0.5").unwrap(), 0.5);
        assert!(parse_rate("0").is_err());
        assert!(parse_rate("1/0").is_err());
        assert!(parse_rate("x").is_err());
    }

    #[test]
    fn later_flags_override_earlier_ones() {
        let cli = Cli::try_parse_from(["epps", "exact", "--seed", "2", "--seed", "5"]).unwrap();
        let Command::Exact(e) = cli.command else {
            panic!()
        };
        assert_eq!(e.common.seed, 5);
    }

    #[test]
    fn zero_horizon_is_a_usage_error() {
        assert!(Cli::try_parse_from(["epps", "simulate", "--horizon", "0"]).is_err());
    }
}
