use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::Args;
use latency_arb_core::price_models::{gbm_distribution, GbmParams};
use latency_arb_core::{dp, FeeRate, PriceChangeDistribution};

use crate::{manifest, usage};

#[derive(Args)]
pub struct SolveArgs {
    /// Decision step; defaults to 10ms, or to the distribution's own step
    /// when --dist is given
    #[arg(long)]
    delta_ms: Option<u64>,
    /// Wait window between spotting an opportunity and being able to act
    #[arg(long, default_value_t = 200)]
    window_ms: u64,
    #[arg(long, default_value_t = 60_000)]
    horizon_ms: u64,
    #[arg(long, default_value_t = 0.0005)]
    fee: f64,
    /// Daily log-return volatility for the built-in price model
    #[arg(long, default_value_t = 0.042)]
    sigma_daily: f64,
    /// Daily log drift in excess of the variance correction
    #[arg(long, default_value_t = 0.0)]
    drift_daily: f64,
    /// One-step distribution JSON (as written by ingest); replaces the
    /// built-in model
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Support half-width when discretizing the built-in model
    #[arg(long, default_value_t = 0.01)]
    pmax: f64,
    /// Support bin count when discretizing the built-in model (odd)
    #[arg(long, default_value_t = 201)]
    n_bins: usize,
    /// Price-ratio grid size (odd)
    #[arg(long, default_value_t = 201)]
    grid_points: usize,
    /// Price-ratio grid half-width
    #[arg(long, default_value_t = 0.05)]
    pmax_total: f64,
    /// Policy CSV output
    #[arg(long)]
    policy_out: Option<PathBuf>,
    /// Raw value-table output (all time layers, little-endian f64)
    #[arg(long)]
    values_bin: Option<PathBuf>,
    /// Keep and export every time layer, not just t = 0. The full cube at
    /// default settings is around 200MB in memory.
    #[arg(long)]
    full_table: bool,
}

pub fn run(args: SolveArgs) -> Result<()> {
    let dist = match &args.dist {
        Some(path) => {
            let file = File::open(path)
                .with_context(|| format!("opening {}", path.display()))
                .map_err(usage)?;
            let dist = PriceChangeDistribution::from_json(BufReader::new(file))
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(usage)?;
            if let Some(delta) = args.delta_ms {
                if delta != dist.step_ms() {
                    return Err(usage(anyhow!(
                        "--delta-ms {} conflicts with the distribution's step of {}ms",
                        delta,
                        dist.step_ms()
                    )));
                }
            }
            dist
        }
        None => {
            let params = GbmParams { sigma_daily: args.sigma_daily, drift_daily: args.drift_daily };
            gbm_distribution(&params, args.delta_ms.unwrap_or(10), args.pmax, args.n_bins)?
        }
    };

    let keep_values = args.full_table || args.values_bin.is_some();
    let config = dp::DpConfig {
        delta_ms: dist.step_ms(),
        t_w_ms: args.window_ms,
        horizon_ms: args.horizon_ms,
        fee: FeeRate::new(args.fee)?,
        n_price_points: args.grid_points,
        pmax_total: args.pmax_total,
        keep_values,
    };
    let tables = dp::solve(&config, &dist)?;
    let diag = tables.diagnostics;

    println!(
        "solved {} price points x {} window rows x {} time layers in {:.2}s",
        tables.grid().n(),
        config.window_steps() + 1,
        config.horizon_steps() + 1,
        diag.solve_seconds
    );
    println!("max |act - wait| value gap at interior states: {:.3e}", diag.max_action_gap);
    println!(
        "wait fraction at profitable interior states: {:.6}",
        diag.wait_fraction_at_profitable()
    );
    println!("max probability mass clamped at a grid edge: {:.3e}", diag.max_clamped_mass);
    println!("value at ratio 1, fresh window, t = 0: {:.6e}", tables.value(1.0, 0, 0)?);

    if let Some(path) = &args.policy_out {
        let mut w = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        tables.export_policy_csv(&mut w, args.full_table)?;
    }
    if let Some(path) = &args.values_bin {
        let mut w = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        tables.export_values_bin(&mut w)?;
    }

    let primary = args.policy_out.as_ref().or(args.values_bin.as_ref());
    let Some(primary) = primary else {
        log::info!("no outputs requested, skipping manifest");
        return Ok(());
    };
    let params = serde_json::json!({
        "delta_ms": config.delta_ms,
        "window_ms": config.t_w_ms,
        "horizon_ms": config.horizon_ms,
        "fee": args.fee,
        "model": if args.dist.is_some() { "file" } else { "gbm" },
        "sigma_daily": args.dist.is_none().then_some(args.sigma_daily),
        "drift_daily": args.dist.is_none().then_some(args.drift_daily),
        "pmax": args.pmax,
        "n_bins": args.n_bins,
        "grid_points": args.grid_points,
        "pmax_total": args.pmax_total,
        "full_table": args.full_table,
        "max_action_gap": diag.max_action_gap,
        "wait_fraction_at_profitable": diag.wait_fraction_at_profitable(),
    });
    let inputs: Vec<&Path> = args.dist.iter().map(PathBuf::as_path).collect();
    let outputs: Vec<&Path> = [args.policy_out.as_deref(), args.values_bin.as_deref()]
        .into_iter()
        .flatten()
        .collect();
    manifest::write("solve", primary, params, None, &inputs, &outputs)?;
    Ok(())
}
