use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::Args;
use latency_arb_core::capture;
use latency_arb_core::PoolState;

use crate::{manifest, usage};

#[derive(Args)]
pub struct CaptureArgs {
    /// External-to-pool price ratio to study
    #[arg(long, default_value_t = 1.01)]
    ratio: f64,
    /// Comma-separated adaptation weights in [0, 1]
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Number of evenly spaced weights when --alphas is not given
    #[arg(long, default_value_t = 101)]
    alpha_steps: usize,
    /// Pool mark-to-market value in dollars
    #[arg(long, default_value_t = 1e8)]
    liquidity_usd: f64,
    /// Pool price used to split the value into reserves
    #[arg(long, default_value_t = 100.0)]
    pool_price: f64,
    /// Output CSV, one row per alpha
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: CaptureArgs) -> Result<()> {
    let alphas: Vec<f64> = match &args.alphas {
        Some(list) => list.clone(),
        None => {
            if args.alpha_steps < 2 {
                return Err(usage(anyhow!("--alpha-steps must be at least 2")));
            }
            let n = args.alpha_steps - 1;
            (0..=n).map(|i| i as f64 / n as f64).collect()
        }
    };
    if !(args.pool_price.is_finite() && args.pool_price > 0.0) {
        return Err(usage(anyhow!("--pool-price must be positive")));
    }
    let pool = PoolState::new(
        args.liquidity_usd / 2.0 / args.pool_price,
        args.liquidity_usd / 2.0,
    )?;

    let sweep = capture::alpha_sweep(args.ratio, &alphas, &pool)?;
    let mut w = csv::Writer::from_path(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    w.write_record([
        "alpha",
        "p1_star",
        "arb_profit_usd",
        "pool_capture_usd",
        "unrealized_usd",
        "map_usd",
    ])?;
    for (alpha, out) in &sweep {
        w.write_record([
            alpha.to_string(),
            out.p1_star.to_string(),
            out.arb_profit_abs.to_string(),
            out.pool_capture_abs.to_string(),
            out.unrealized_abs.to_string(),
            out.map_abs.to_string(),
        ])?;
    }
    w.flush()?;

    let best = sweep
        .iter()
        .max_by(|a, b| a.1.pool_capture_abs.total_cmp(&b.1.pool_capture_abs))
        .expect("alpha list is non-empty");
    println!(
        "ratio {}: gap value {:.2} USD; pool capture peaks at alpha {} with {:.2} USD ({:.1}% of gap)",
        args.ratio,
        best.1.map_abs,
        best.0,
        best.1.pool_capture_abs,
        100.0 * best.1.pool_capture_abs / best.1.map_abs.max(f64::MIN_POSITIVE),
    );

    let params = serde_json::json!({
        "ratio": args.ratio,
        "alphas": alphas,
        "liquidity_usd": args.liquidity_usd,
        "pool_price": args.pool_price,
    });
    manifest::write("capture", &args.out, params, None, &[], &[&args.out])?;
    Ok(())
}
