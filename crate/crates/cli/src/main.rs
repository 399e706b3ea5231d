//! `fedct`: run federated co-training experiments and evaluate the
//! accompanying bounds.
//!
//! Exit codes: 0 success, 2 configuration or argument error, 3 runtime error.

mod commands;
mod config;
mod error;
mod output;

use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedct_core::protocol::ProtocolKind;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "fedct", version, about = "Federated co-training experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured protocol and write rounds.csv, summary.json and manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the convergence bound (--u --m --c --t0) or the sensitivity bound (--n --rate --delta).
    Bounds(BoundsArgs),
    /// Estimate prediction sensitivity of one client's learner on U.
    Sensitivity {
        #[arg(long)]
        config: PathBuf,
    },
    /// Membership inference against the configured protocol's trained clients.
    Attack {
        #[arg(long)]
        config: PathBuf,
    },
    /// Bytes one client sends per communication round and in total.
    Comm(CommArgs),
    /// Per-round table of a finished run, as whitespace-separated columns.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub u: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub t0: Option<u64>,
    /// Client accuracy for the per-round change bound.
    #[arg(long)]
    pub accuracy: Option<f64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CommArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: ProtocolKind,
    #[arg(long, default_value_t = 0)]
    pub u: u64,
    #[arg(long, default_value_t = 2)]
    pub classes: u64,
    #[arg(long, default_value_t = 0)]
    pub params: u64,
    #[arg(long, default_value_t = 32)]
    pub bits: u32,
    #[arg(long, default_value_t = 1)]
    pub rounds: u64,
    #[arg(long, default_value_t = 1)]
    pub period: u64,
}

fn parse_protocol(s: &str) -> Result<ProtocolKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        format!("unknown protocol {s:?}; expected fedct, dp-fedct, fedavg, local-only, centralized or pate")
    })
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("FEDCT_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config("FEDCT_THREADS", format!("expected a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(CliError::runtime)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Run { config, out } => commands::run(&config, &out),
        Command::Bounds(args) => commands::bounds(&args),
        Command::Sensitivity { config } => commands::sensitivity(&config),
        Command::Attack { config } => commands::attack(&config),
        Command::Comm(args) => commands::comm(&args),
        Command::Report { dir } => commands::report(&dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
