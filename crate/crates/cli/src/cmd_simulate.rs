use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::Args;
use latency_arb_core::price_models::{gbm_distribution, GbmParams};
use latency_arb_core::regime::{self, PathSource, Regime, RegimeConfig, RegimeReport};
use latency_arb_core::{FeeRate, PriceChangeDistribution};

use crate::{manifest, usage};

#[derive(Args)]
pub struct SimulateArgs {
    /// fcfs, pga, timeboost, or all
    #[arg(long, default_value = "all")]
    regime: String,
    /// Number of simulated minutes; the pool resets to the external price
    /// at each minute boundary
    #[arg(long, default_value_t = 2000)]
    minutes: usize,
    #[arg(long, default_value_t = 10)]
    step_ms: u64,
    #[arg(long, default_value_t = 60_000)]
    minute_ms: u64,
    #[arg(long, default_value_t = 0.0005)]
    fee: f64,
    /// Pool mark-to-market value in dollars
    #[arg(long, default_value_t = 1e8)]
    liquidity_usd: f64,
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
    /// Support bin count when discretizing the built-in model. Keep the
    /// bin width well under one step's sigma, or sampled paths lose
    /// variance to rounding.
    #[arg(long, default_value_t = 2001)]
    n_bins: usize,
    /// Switch to a mean-reverting log-ratio path model with this reversion
    /// strength in [0, 1); requires --sigma-step
    #[arg(long)]
    kappa: Option<f64>,
    /// Per-step log sigma for the mean-reverting model
    #[arg(long)]
    sigma_step: Option<f64>,
    /// Timeboost delay sweep, comma-separated ms
    #[arg(long, value_delimiter = ',', default_value = "200")]
    tw_ms: Vec<u64>,
    /// PGA block interval sweep, comma-separated ms
    #[arg(long, value_delimiter = ',', default_value = "200")]
    block_time_ms: Vec<u64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Summary CSV, one row per regime and parameter value
    #[arg(long)]
    out: PathBuf,
    /// Optional per-minute CSV
    #[arg(long)]
    minutes_out: Option<PathBuf>,
}

fn parse_regimes(raw: &str) -> Result<Vec<Regime>> {
    match raw {
        "fcfs" => Ok(vec![Regime::Fcfs]),
        "pga" => Ok(vec![Regime::Pga]),
        "timeboost" => Ok(vec![Regime::Timeboost]),
        "all" => Ok(vec![Regime::Fcfs, Regime::Pga, Regime::Timeboost]),
        other => Err(usage(anyhow!(
            "unknown regime {other:?}; expected fcfs, pga, timeboost, or all"
        ))),
    }
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let regimes = parse_regimes(&args.regime)?;
    if args.kappa.is_some() != args.sigma_step.is_some() {
        return Err(usage(anyhow!("--kappa and --sigma-step must be given together")));
    }
    if args.kappa.is_some() && args.dist.is_some() {
        return Err(usage(anyhow!("--kappa and --dist are mutually exclusive")));
    }

    let sampled_dist = match (&args.dist, args.kappa) {
        (Some(path), _) => {
            let file = File::open(path)
                .with_context(|| format!("opening {}", path.display()))
                .map_err(usage)?;
            let dist = PriceChangeDistribution::from_json(BufReader::new(file))
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(usage)?;
            if dist.step_ms() != args.step_ms {
                return Err(usage(anyhow!(
                    "distribution step {}ms does not match --step-ms {}",
                    dist.step_ms(),
                    args.step_ms
                )));
            }
            Some(dist)
        }
        (None, None) => {
            let params = GbmParams { sigma_daily: args.sigma_daily, drift_daily: args.drift_daily };
            Some(gbm_distribution(&params, args.step_ms, args.pmax, args.n_bins)?)
        }
        (None, Some(_)) => None,
    };
    let source = match &sampled_dist {
        Some(dist) => PathSource::Sampled { dist, seed: args.seed },
        None => PathSource::MeanReverting {
            sigma_step: args.sigma_step.expect("checked above"),
            kappa: args.kappa.expect("checked above"),
            seed: args.seed,
        },
    };

    let base = RegimeConfig {
        step_ms: args.step_ms,
        minute_ms: args.minute_ms,
        fee: FeeRate::new(args.fee)?,
        liquidity_usd: args.liquidity_usd,
        ..RegimeConfig::default()
    };

    let mut summary = csv::Writer::from_path(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    summary.write_record(["regime", "param_ms", "minutes", "mean_usd", "median_usd", "p99_usd", "total_usd"])?;
    let mut per_minute = match &args.minutes_out {
        Some(path) => {
            let mut w = csv::Writer::from_path(path)
                .with_context(|| format!("creating {}", path.display()))?;
            w.write_record(["regime", "param_ms", "minute", "profit_usd", "n_trades"])?;
            Some(w)
        }
        None => None,
    };

    if args.minutes == 0 {
        log::warn!("--minutes 0: writing headers only");
    }

    let mut reports: Vec<RegimeReport> = Vec::new();
    for &regime in &regimes {
        let params: &[u64] = match regime {
            Regime::Fcfs => &[0],
            Regime::Pga => &args.block_time_ms,
            Regime::Timeboost => &args.tw_ms,
        };
        for &param in params {
            if args.minutes == 0 {
                continue;
            }
            let cfg = match regime {
                Regime::Fcfs => base,
                Regime::Pga => RegimeConfig { block_time_ms: param, ..base },
                Regime::Timeboost => RegimeConfig { t_w_ms: param, ..base },
            };
            let report = regime::simulate(regime, &cfg, source, args.minutes)?;
            let total: f64 = report.minutes.iter().map(|m| m.profit_usd).sum();
            summary.write_record([
                report.regime.as_str().to_string(),
                report.param_ms.to_string(),
                report.n_minutes().to_string(),
                report.mean_usd.to_string(),
                report.median_usd.to_string(),
                report.p99_usd.to_string(),
                total.to_string(),
            ])?;
            if let Some(w) = per_minute.as_mut() {
                for m in &report.minutes {
                    w.write_record([
                        report.regime.as_str().to_string(),
                        report.param_ms.to_string(),
                        m.minute.to_string(),
                        m.profit_usd.to_string(),
                        m.n_trades.to_string(),
                    ])?;
                }
            }
            println!(
                "{:<9} param {:>5}ms: mean {:>12.2} median {:>12.2} p99 {:>12.2} over {} minutes",
                report.regime.as_str(),
                report.param_ms,
                report.mean_usd,
                report.median_usd,
                report.p99_usd,
                report.n_minutes()
            );
            reports.push(report);
        }
    }
    summary.flush()?;
    if let Some(mut w) = per_minute {
        w.flush()?;
    }

    let params = serde_json::json!({
        "regime": args.regime,
        "minutes": args.minutes,
        "step_ms": args.step_ms,
        "minute_ms": args.minute_ms,
        "fee": args.fee,
        "liquidity_usd": args.liquidity_usd,
        "model": if args.dist.is_some() { "file" } else if args.kappa.is_some() { "mean_reverting" } else { "gbm" },
        "sigma_daily": (args.dist.is_none() && args.kappa.is_none()).then_some(args.sigma_daily),
        "drift_daily": (args.dist.is_none() && args.kappa.is_none()).then_some(args.drift_daily),
        "pmax": args.pmax,
        "n_bins": args.n_bins,
        "kappa": args.kappa,
        "sigma_step": args.sigma_step,
        "tw_ms": args.tw_ms,
        "block_time_ms": args.block_time_ms,
    });
    let inputs: Vec<&Path> = args.dist.iter().map(PathBuf::as_path).collect();
    let mut outputs: Vec<&Path> = vec![&args.out];
    if let Some(p) = &args.minutes_out {
        outputs.push(p);
    }
    manifest::write("simulate", &args.out, params, Some(args.seed), &inputs, &outputs)?;
    Ok(())
}
