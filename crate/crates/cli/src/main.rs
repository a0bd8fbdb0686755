//! `latency-arb`: command line front end for the arbitrage timing toolkit.
//!
//! Exit codes: 0 on success, 2 for usage or input errors, 1 for anything
//! else. Every run that produces a file also writes a sidecar
//! `<output>.manifest.json` recording resolved parameters and content
//! digests of inputs and outputs.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd_capture;
mod cmd_ingest;
mod cmd_simulate;
mod cmd_solve;
mod manifest;

#[derive(Parser)]
#[command(name = "latency-arb", version, about = "Arbitrage timing toolkit for constant-product AMM pools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resample tick data and fit a one-step price-change distribution
    Ingest(cmd_ingest::IngestArgs),
    /// Solve the wait-vs-arbitrage policy by backward induction
    Solve(cmd_solve::SolveArgs),
    /// Simulate per-minute arbitrage profits under sequencing regimes
    Simulate(cmd_simulate::SimulateArgs),
    /// Split the arbitrage value between arbitrageur and an adaptive pool
    Capture(cmd_capture::CaptureArgs),
}

/// Marker attached to errors caused by bad arguments or bad input files.
#[derive(Debug)]
pub struct UsageError;

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("invalid usage")
    }
}

impl std::error::Error for UsageError {}

pub fn usage<E: Into<anyhow::Error>>(err: E) -> anyhow::Error {
    err.into().context(UsageError)
}

fn exit_code_for(err: &anyhow::Error) -> ExitCode {
    use latency_arb_core::Error as CoreError;
    // downcast_ref walks attached contexts as well as the source chain;
    // chain() alone would hide the UsageError marker inside anyhow's
    // private context wrapper.
    let is_usage = err.downcast_ref::<UsageError>().is_some()
        || matches!(
            err.downcast_ref::<CoreError>(),
            Some(CoreError::Domain(_) | CoreError::Config(_) | CoreError::Format(_))
        );
    if is_usage {
        ExitCode::from(2)
    } else {
        ExitCode::FAILURE
    }
}

fn init_thread_pool() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("LATENCY_ARB_THREADS") {
        let threads: usize = raw
            .parse()
            .map_err(|_| usage(anyhow::anyhow!("LATENCY_ARB_THREADS must be a number, got {raw:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = init_thread_pool().and_then(|()| match cli.command {
        Command::Ingest(args) => cmd_ingest::run(args),
        Command::Solve(args) => cmd_solve::run(args),
        Command::Simulate(args) => cmd_simulate::run(args),
        Command::Capture(args) => cmd_capture::run(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            log::error!("{err:#}");
            exit_code_for(&err)
        }
    }
}
