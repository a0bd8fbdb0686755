//! Tick ingestion, mid-price resampling, and reduction of a price series to
//! the one-step change distribution and summary statistics.

use std::io::Read;

use crate::dist::PriceChangeDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    pub timestamp_ms: i64,
    pub bid: f64,
    pub ask: f64,
}

impl TickRecord {
    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }
}

/// Ingestion result. Rows that cannot be parsed at all count as malformed;
/// rows that parse but violate the data contract (crossed quotes,
/// nonpositive or non-finite prices, timestamps that go backwards) count as
/// invalid. Both are dropped, never repaired.
#[derive(Debug, Clone)]
pub struct TickIngest {
    pub ticks: Vec<TickRecord>,
    pub dropped_malformed: usize,
    pub dropped_invalid: usize,
}

impl TickIngest {
    pub fn dropped(&self) -> usize {
        self.dropped_malformed + self.dropped_invalid
    }
}

/// Mid prices on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MidPriceSeries {
    pub start_ms: i64,
    pub step_ms: u64,
    pub mids: Vec<f64>,
}

impl MidPriceSeries {
    pub fn len(&self) -> usize {
        self.mids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mids.is_empty()
    }

    pub fn timestamp_at(&self, i: usize) -> i64 {
        self.start_ms + i as i64 * self.step_ms as i64
    }

    /// One-step ratios m[i+1]/m[i].
    pub fn step_ratios(&self) -> Vec<f64> {
        self.mids.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    /// Standard deviation of one-step log returns, scaled to one day.
    pub daily_volatility: f64,
    /// Lag-1 Pearson correlation of log returns over consecutive
    /// non-overlapping windows of roughly 50ms.
    pub autocorr_50ms: f64,
    /// False when the series is too short or has zero variance, in which
    /// case `autocorr_50ms` is reported as 0.
    pub autocorr_defined: bool,
    pub n_steps: usize,
}

/// Reads `timestamp_ms,bid,ask` CSV. The header row is required. Returns
/// the surviving ticks in timestamp order together with drop counts.
pub fn ingest_ticks<R: Read>(reader: R) -> Result<TickIngest> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    {
        let headers = rdr.headers()?;
        let expect = ["timestamp_ms", "bid", "ask"];
        let got: Vec<&str> = headers.iter().map(|h| h.trim()).collect();
        if got != expect {
            return Err(Error::Format(format!(
                "expected header timestamp_ms,bid,ask, got {:?}",
                got.join(",")
            )));
        }
    }
    let mut ticks: Vec<TickRecord> = Vec::new();
    let mut malformed = 0usize;
    let mut invalid = 0usize;
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(_) => {
                malformed += 1;
                continue;
            }
        };
        if rec.len() != 3 {
            malformed += 1;
            continue;
        }
        let parsed: Option<(i64, f64, f64)> = (|| {
            let t = rec[0].trim().parse::<i64>().ok()?;
            let bid = rec[1].trim().parse::<f64>().ok()?;
            let ask = rec[2].trim().parse::<f64>().ok()?;
            Some((t, bid, ask))
        })();
        let (t, bid, ask) = match parsed {
            Some(v) => v,
            None => {
                malformed += 1;
                continue;
            }
        };
        if !(bid.is_finite() && ask.is_finite()) || bid <= 0.0 || ask <= 0.0 || bid > ask {
            invalid += 1;
            continue;
        }
        if let Some(last) = ticks.last() {
            if t < last.timestamp_ms {
                invalid += 1;
                continue;
            }
        }
        ticks.push(TickRecord { timestamp_ms: t, bid, ask });
    }
    Ok(TickIngest { ticks, dropped_malformed: malformed, dropped_invalid: invalid })
}

/// Samples mids onto the grid t0, t0+step, ... up to the last tick,
/// carrying the most recent tick forward. Resampling an already-uniform
/// series at the same step returns it unchanged.
pub fn resample_mid(ticks: &[TickRecord], step_ms: u64) -> Result<MidPriceSeries> {
    if step_ms == 0 {
        return Err(Error::Config("step_ms must be positive".into()));
    }
    if ticks.is_empty() {
        return Err(Error::Domain("cannot resample an empty tick series".into()));
    }
    let start = ticks[0].timestamp_ms;
    let end = ticks[ticks.len() - 1].timestamp_ms;
    let n = ((end - start) as u64 / step_ms) as usize + 1;
    let mut mids = Vec::with_capacity(n);
    let mut idx = 0usize;
    for i in 0..n {
        let t = start + (i as u64 * step_ms) as i64;
        while idx + 1 < ticks.len() && ticks[idx + 1].timestamp_ms <= t {
            idx += 1;
        }
        mids.push(ticks[idx].mid());
    }
    Ok(MidPriceSeries { start_ms: start, step_ms, mids })
}

/// Reduces a mid series to a one-step change distribution: ratios are
/// clamped into [1-pmax, 1+pmax] and histogrammed into `n_bins` equal-width
/// bins whose centers include exactly 1 (so `n_bins` must be odd). Bins
/// with zero mass are dropped from the support.
pub fn empirical_distribution(
    series: &MidPriceSeries,
    pmax: f64,
    n_bins: usize,
) -> Result<PriceChangeDistribution> {
    if n_bins < 3 || n_bins.is_multiple_of(2) {
        return Err(Error::Config(format!("n_bins must be odd and >= 3, got {n_bins}")));
    }
    if !(pmax.is_finite() && pmax > 0.0 && pmax < 1.0) {
        return Err(Error::Domain(format!("pmax must be in (0, 1), got {pmax}")));
    }
    if series.len() < 2 {
        return Err(Error::Domain(
            "need at least two mids to form a price change".into(),
        ));
    }
    let width = 2.0 * pmax / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    for r in series.step_ratios() {
        let r = r.clamp(1.0 - pmax, 1.0 + pmax);
        // Bin k covers [1-pmax + k*width, 1-pmax + (k+1)*width); the top
        // edge belongs to the last bin.
        let k = (((r - (1.0 - pmax)) / width) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let total: u64 = counts.iter().sum();
    let mid = (n_bins - 1) / 2;
    let pairs: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(k, &c)| {
            // Centers placed symmetrically about exactly 1.0.
            let center = 1.0 + (k as f64 - mid as f64) * width;
            (center, c as f64 / total as f64)
        })
        .collect();
    PriceChangeDistribution::new(series.step_ms, pmax, &pairs)
}

/// Volatility and short-horizon autocorrelation of a mid series.
pub fn pair_stats(series: &MidPriceSeries) -> Result<PairStats> {
    if series.len() < 3 {
        return Err(Error::Domain("need at least three mids for pair stats".into()));
    }
    let logret: Vec<f64> = series.mids.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let n = logret.len();
    let mean = logret.iter().sum::<f64>() / n as f64;
    let var = logret.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64;
    let steps_per_day = 86_400_000.0 / series.step_ms as f64;
    let daily_volatility = var.sqrt() * steps_per_day.sqrt();

    // Aggregate into non-overlapping windows of about 50ms before taking
    // the lag-1 correlation, so the statistic means the same thing across
    // sampling steps.
    let w = ((50.0 / series.step_ms as f64).round() as usize).max(1);
    let windows: Vec<f64> = logret.chunks_exact(w).map(|c| c.iter().sum()).collect();
    let (autocorr, defined) = lag1_pearson(&windows);
    Ok(PairStats {
        daily_volatility,
        autocorr_50ms: autocorr,
        autocorr_defined: defined,
        n_steps: n,
    })
}

fn lag1_pearson(xs: &[f64]) -> (f64, bool) {
    if xs.len() < 3 {
        return (0.0, false);
    }
    let a = &xs[..xs.len() - 1];
    let b = &xs[1..];
    let ma = a.iter().sum::<f64>() / a.len() as f64;
    let mb = b.iter().sum::<f64>() / b.len() as f64;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..a.len() {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return (0.0, false);
    }
    (cov / (va.sqrt() * vb.sqrt()), true)
}
