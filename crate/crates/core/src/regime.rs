//! Per-minute arbitrage profit under different transaction-sequencing
//! regimes, against a constant-product pool that quotes a stale price
//! between arbitrages.
//!
//! Each simulated minute starts a fresh pool exactly on the external price.
//! The gap ratio then follows the supplied path; a regime decides when the
//! arbitrageur gets to close it:
//!
//! - fcfs: any step with positive profit is arbitraged immediately (the
//!   fastest racer wins at once).
//! - pga: auctions settle only at block boundaries, so the gap is closed
//!   every `block_time_ms` when profitable.
//! - timeboost: the advantaged arbitrageur sees an opportunity and owns it
//!   after a fixed delay `t_w_ms`; the gap keeps drifting until the delayed
//!   execution lands. Anything still open at the minute end is taken then,
//!   since the next minute resets the pool.
//!
//! Profits are in numeraire (dollars) for a pool of mark-to-market value
//! `liquidity_usd`; arbitrages compound the pool-value factor within the
//! minute.

use rayon::prelude::*;

use crate::cpmm::{self, FeeRate, PriceRatio};
use crate::dist::PriceChangeDistribution;
use crate::error::{Error, Result};
use crate::price_models::{self, PathSampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Fcfs,
    Pga,
    Timeboost,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Fcfs => "fcfs",
            Regime::Pga => "pga",
            Regime::Timeboost => "timeboost",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeConfig {
    pub step_ms: u64,
    pub minute_ms: u64,
    pub fee: FeeRate,
    /// Pool mark-to-market value in dollars (2Y).
    pub liquidity_usd: f64,
    /// PGA block interval.
    pub block_time_ms: u64,
    /// Timeboost delay between spotting an opportunity and executing it.
    pub t_w_ms: u64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        RegimeConfig {
            step_ms: 10,
            minute_ms: 60_000,
            fee: FeeRate::new(0.0005).unwrap(),
            liquidity_usd: 1e8,
            block_time_ms: 200,
            t_w_ms: 200,
        }
    }
}

impl RegimeConfig {
    pub fn steps_per_minute(&self) -> usize {
        (self.minute_ms / self.step_ms) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_ms == 0 {
            return Err(Error::Config("step_ms must be positive".into()));
        }
        if !self.minute_ms.is_multiple_of(self.step_ms) || self.minute_ms == 0 {
            return Err(Error::Config("minute_ms must be a positive multiple of step_ms".into()));
        }
        for (name, v) in [("block_time_ms", self.block_time_ms), ("t_w_ms", self.t_w_ms)] {
            if v == 0 || v % self.step_ms != 0 {
                return Err(Error::Config(format!(
                    "{name} must be a positive multiple of step_ms"
                )));
            }
        }
        if !(self.liquidity_usd.is_finite() && self.liquidity_usd > 0.0) {
            return Err(Error::Config("liquidity_usd must be positive".into()));
        }
        Ok(())
    }
}

/// One executed arbitrage, for cross-checking against the trade-level math.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeEvent {
    pub t_ms: u64,
    /// Gap ratio at execution, before closing.
    pub ratio: f64,
    /// Profit as a fraction of current pool value.
    pub profit_rel: f64,
    /// Pool value factor accumulated before this trade (1 at minute start).
    pub pool_scale_before: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinuteResult {
    pub minute: usize,
    pub profit_usd: f64,
    pub n_trades: u32,
}

/// Where the per-minute ratio paths come from. Paths are identical across
/// regimes and parameter settings for a given source and seed, so regime
/// comparisons are paired.
#[derive(Clone, Copy)]
pub enum PathSource<'a> {
    /// Seeded draws from a one-step change distribution; minute m uses
    /// stream m.
    Sampled { dist: &'a PriceChangeDistribution, seed: u64 },
    /// Mean-reverting log returns (see `price_models::mean_reverting_path`),
    /// state reset each minute; minute m uses stream m.
    MeanReverting { sigma_step: f64, kappa: f64, seed: u64 },
    /// Replayed per-minute ratio paths, e.g. resampled market data.
    Replay(&'a [Vec<f64>]),
}

fn minute_ratios(source: &PathSource<'_>, cfg: &RegimeConfig, minute: usize) -> Vec<f64> {
    let steps = cfg.steps_per_minute();
    match source {
        PathSource::Sampled { dist, seed } => {
            let mut rng = price_models::path_rng(*seed, minute as u64);
            PathSampler::new(dist).sample_path(steps, &mut rng).ratios
        }
        PathSource::MeanReverting { sigma_step, kappa, seed } => {
            let mut rng = price_models::path_rng(*seed, minute as u64);
            price_models::mean_reverting_path(*sigma_step, *kappa, cfg.step_ms, steps, &mut rng)
                .expect("validated parameters")
                .ratios
        }
        PathSource::Replay(minutes) => minutes[minute].clone(),
    }
}

struct MinuteState<'t> {
    gap: f64,   // external price over pool quote
    scale: f64, // accumulated pool value factor
    profit_usd: f64,
    n_trades: u32,
    trace: Option<&'t mut Vec<TradeEvent>>,
}

impl MinuteState<'_> {
    /// Closes the gap if profitable. Returns whether a trade happened.
    fn execute(&mut self, t: u64, cfg: &RegimeConfig) -> Result<bool> {
        let pr = PriceRatio::new(self.gap)?;
        let rel = cpmm::arb_profit(pr, cfg.fee);
        if rel <= 0.0 {
            return Ok(false);
        }
        if let Some(tr) = self.trace.as_deref_mut() {
            tr.push(TradeEvent {
                t_ms: t,
                ratio: self.gap,
                profit_rel: rel,
                pool_scale_before: self.scale,
            });
        }
        self.profit_usd += rel * self.scale * cfg.liquidity_usd;
        self.scale *= cpmm::pool_val_factor(pr, cfg.fee);
        self.gap = cpmm::p_arb(pr, cfg.fee).get();
        self.n_trades += 1;
        Ok(true)
    }

    fn profitable(&self, cfg: &RegimeConfig) -> Result<bool> {
        Ok(cpmm::arb_profit(PriceRatio::new(self.gap)?, cfg.fee) > 0.0)
    }
}

/// Runs one minute of a regime over the given one-step ratios. The pool
/// starts exactly on the external price. Returns (profit_usd, n_trades).
pub fn run_minute(
    regime: Regime,
    cfg: &RegimeConfig,
    ratios: &[f64],
    trace: Option<&mut Vec<TradeEvent>>,
) -> Result<(f64, u32)> {
    let mut st = MinuteState { gap: 1.0, scale: 1.0, profit_usd: 0.0, n_trades: 0, trace };
    let mut deadline: Option<u64> = None;

    for (idx, &r) in ratios.iter().enumerate() {
        let t = (idx as u64 + 1) * cfg.step_ms;
        st.gap *= r;
        match regime {
            Regime::Fcfs => {
                st.execute(t, cfg)?;
            }
            Regime::Pga => {
                if t.is_multiple_of(cfg.block_time_ms) {
                    st.execute(t, cfg)?;
                }
            }
            Regime::Timeboost => {
                if deadline == Some(t) {
                    deadline = None;
                    st.execute(t, cfg)?;
                }
                if t == cfg.minute_ms && st.execute(t, cfg)? {
                    // Last chance before the pool resets.
                    deadline = None;
                }
                if deadline.is_none() && st.profitable(cfg)? {
                    deadline = Some(t + cfg.t_w_ms);
                }
            }
        }
    }
    Ok((st.profit_usd, st.n_trades))
}

#[derive(Debug, Clone)]
pub struct RegimeReport {
    pub regime: Regime,
    /// The regime's timing parameter: block_time_ms for pga, t_w_ms for
    /// timeboost, 0 for fcfs (it has none).
    pub param_ms: u64,
    pub mean_usd: f64,
    pub median_usd: f64,
    pub p99_usd: f64,
    pub minutes: Vec<MinuteResult>,
}

impl RegimeReport {
    pub fn n_minutes(&self) -> usize {
        self.minutes.len()
    }
}

/// Simulates `n_minutes` independent minutes of a regime. Minutes are
/// independent streams of the source, so the run parallelizes across
/// threads with identical results.
pub fn simulate(
    regime: Regime,
    cfg: &RegimeConfig,
    source: PathSource<'_>,
    n_minutes: usize,
) -> Result<RegimeReport> {
    cfg.validate()?;
    if let PathSource::Sampled { dist, .. } = source {
        if dist.step_ms() != cfg.step_ms {
            return Err(Error::Config(format!(
                "distribution step {}ms does not match step_ms {}ms",
                dist.step_ms(),
                cfg.step_ms
            )));
        }
    }
    if let PathSource::Replay(minutes) = source {
        if minutes.len() < n_minutes {
            return Err(Error::Config(format!(
                "replay source has {} minutes, need {n_minutes}",
                minutes.len()
            )));
        }
        let steps = cfg.steps_per_minute();
        if let Some(bad) = minutes[..n_minutes].iter().position(|m| m.len() != steps) {
            return Err(Error::Config(format!(
                "replay minute {bad} has {} steps, expected {steps}",
                minutes[bad].len()
            )));
        }
    }
    let minutes: Vec<MinuteResult> = (0..n_minutes)
        .into_par_iter()
        .map(|m| {
            let ratios = minute_ratios(&source, cfg, m);
            let (profit_usd, n_trades) = run_minute(regime, cfg, &ratios, None)?;
            Ok(MinuteResult { minute: m, profit_usd, n_trades })
        })
        .collect::<Result<_>>()?;
    let profits: Vec<f64> = minutes.iter().map(|m| m.profit_usd).collect();
    let (mean_usd, median_usd, p99_usd) = profit_stats(&profits);
    Ok(RegimeReport {
        regime,
        param_ms: match regime {
            Regime::Fcfs => 0,
            Regime::Pga => cfg.block_time_ms,
            Regime::Timeboost => cfg.t_w_ms,
        },
        mean_usd,
        median_usd,
        p99_usd,
        minutes,
    })
}

pub fn simulate_fcfs(
    cfg: &RegimeConfig,
    source: PathSource<'_>,
    n_minutes: usize,
) -> Result<RegimeReport> {
    simulate(Regime::Fcfs, cfg, source, n_minutes)
}

pub fn simulate_pga(
    cfg: &RegimeConfig,
    source: PathSource<'_>,
    n_minutes: usize,
) -> Result<RegimeReport> {
    simulate(Regime::Pga, cfg, source, n_minutes)
}

pub fn simulate_timeboost(
    cfg: &RegimeConfig,
    source: PathSource<'_>,
    n_minutes: usize,
) -> Result<RegimeReport> {
    simulate(Regime::Timeboost, cfg, source, n_minutes)
}

/// Mean, median, and 99th percentile. Median is the lower of the two
/// central order statistics for even counts; p99 is nearest-rank.
pub fn profit_stats(profits: &[f64]) -> (f64, f64, f64) {
    if profits.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = profits.len();
    let mean = profits.iter().sum::<f64>() / n as f64;
    let mut sorted = profits.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[(n - 1) / 2];
    let rank = (99 * n).div_ceil(100).max(1);
    let p99 = sorted[rank - 1];
    (mean, median, p99)
}

/// Histogram of per-minute profits: a zero bin for minutes at or below one
/// cent, then doubling bins upward. Returns (low, high, count) rows.
pub fn profit_histogram(profits: &[f64]) -> Vec<(f64, f64, u64)> {
    const CENT: f64 = 0.01;
    let zero = profits.iter().filter(|&&p| p <= CENT).count() as u64;
    let mut bins: Vec<(f64, f64, u64)> = vec![(0.0, CENT, zero)];
    let max = profits.iter().cloned().fold(0.0, f64::max);
    if max > CENT {
        let n_bins = ((max / CENT).log2().ceil() as usize).max(1);
        let mut counts = vec![0u64; n_bins];
        for &p in profits.iter().filter(|&&p| p > CENT) {
            let k = ((p / CENT).log2().ceil() as usize).saturating_sub(1).min(n_bins - 1);
            counts[k] += 1;
        }
        for (k, c) in counts.into_iter().enumerate() {
            let lo = CENT * (1u64 << k) as f64;
            bins.push((lo, lo * 2.0, c));
        }
    }
    bins
}

/// Running cumulative profit by minute.
pub fn cumulative_profit(minutes: &[MinuteResult]) -> Vec<f64> {
    minutes
        .iter()
        .scan(0.0, |acc, m| {
            *acc += m.profit_usd;
            Some(*acc)
        })
        .collect()
}
