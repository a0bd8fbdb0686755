use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use flate2::read::GzDecoder;
use latency_arb_core::market_data;

use crate::{manifest, usage};

#[derive(Args)]
pub struct IngestArgs {
    /// Tick CSV with a timestamp_ms,bid,ask header; .gz is detected by
    /// extension
    #[arg(long)]
    ticks: PathBuf,
    /// Resampling interval
    #[arg(long, default_value_t = 10)]
    step_ms: u64,
    /// Half-width of the fitted support around ratio 1
    #[arg(long, default_value_t = 0.01)]
    pmax: f64,
    /// Histogram bin count (odd, so ratio 1 is a bin center)
    #[arg(long, default_value_t = 201)]
    n_bins: usize,
    /// Where to write the one-step distribution JSON
    #[arg(long)]
    out: PathBuf,
    /// Optional pair statistics JSON
    #[arg(long)]
    stats_out: Option<PathBuf>,
}

fn open_ticks(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(usage)?;
    let buf = BufReader::new(file);
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(GzDecoder::new(buf)))
    } else {
        Ok(Box::new(buf))
    }
}

pub fn run(args: IngestArgs) -> Result<()> {
    let ingest = market_data::ingest_ticks(open_ticks(&args.ticks)?).map_err(usage)?;
    log::info!(
        "kept {} ticks ({} malformed, {} invalid dropped)",
        ingest.ticks.len(),
        ingest.dropped_malformed,
        ingest.dropped_invalid
    );
    let series = market_data::resample_mid(&ingest.ticks, args.step_ms)?;
    let stats = market_data::pair_stats(&series)?;
    let dist = market_data::empirical_distribution(&series, args.pmax, args.n_bins)?;

    let mut w = BufWriter::new(
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?,
    );
    dist.to_json(&mut w)?;
    drop(w);

    if let Some(stats_path) = &args.stats_out {
        let json = serde_json::json!({
            "n_steps": stats.n_steps,
            "step_ms": args.step_ms,
            "daily_volatility": stats.daily_volatility,
            "autocorr_50ms": stats.autocorr_defined.then_some(stats.autocorr_50ms),
        });
        let file = File::create(stats_path)
            .with_context(|| format!("creating {}", stats_path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &json)?;
    }

    println!(
        "resampled {} mid prices at {}ms from {} ticks",
        series.len(),
        args.step_ms,
        ingest.ticks.len()
    );
    println!("daily volatility estimate: {:.6}", stats.daily_volatility);
    if stats.autocorr_defined {
        println!("50ms log-return autocorrelation: {:.4}", stats.autocorr_50ms);
    } else {
        println!("50ms log-return autocorrelation: undefined (series too short or flat)");
    }
    println!("distribution support: {} ratios, mean {:.9}", dist.len(), dist.mean());

    let params = serde_json::json!({
        "ticks": args.ticks.display().to_string(),
        "step_ms": args.step_ms,
        "pmax": args.pmax,
        "n_bins": args.n_bins,
        "ticks_kept": ingest.ticks.len(),
        "ticks_dropped_malformed": ingest.dropped_malformed,
        "ticks_dropped_invalid": ingest.dropped_invalid,
    });
    let mut outputs: Vec<&Path> = vec![&args.out];
    if let Some(p) = &args.stats_out {
        outputs.push(p);
    }
    manifest::write("ingest", &args.out, params, None, &[&args.ticks], &outputs)?;
    Ok(())
}
