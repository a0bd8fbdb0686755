//! Backward-induction solver for the wait-vs-arbitrage timing decision.
//!
//! State is (price ratio, window elapsed, game time elapsed) on a log-price
//! grid. An arbitrageur holding a time advantage of `t_w_ms` can serve an
//! opportunity at any point before the window expires; waiting lets the gap
//! drift (good in expectation, since arbitrage profit is convex in the
//! ratio) but risks the window running out. Values are in units of current
//! pool value, so arbitraging rescales the continuation by the pool value
//! factor and restarts the window.
//!
//! Time indexing: layer k holds values at elapsed game time k*delta_ms, row
//! j holds window-elapsed time j*delta_ms. Row W (= t_w/delta) is the
//! forced-action row; layer K (= horizon/delta) is terminal, where the
//! value is the immediate arbitrage profit.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::cpmm::{self, FeeRate, PriceRatio};
use crate::dist::PriceChangeDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Wait,
    Arb,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Wait => "wait",
            Action::Arb => "arb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpConfig {
    pub delta_ms: u64,
    pub t_w_ms: u64,
    pub horizon_ms: u64,
    pub fee: FeeRate,
    pub n_price_points: usize,
    /// Requested half-width of the price-ratio grid, as a deviation from 1.
    /// With a nonzero fee the spacing is adjusted so the no-trade band
    /// edges land exactly on grid points, which moves the realized width a
    /// little.
    pub pmax_total: f64,
    /// Retain the full value cube. Off by default: readouts away from t = 0
    /// and the exports that need all layers are unavailable without it, but
    /// the default-sized cube is ~200MB.
    pub keep_values: bool,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            delta_ms: 10,
            t_w_ms: 200,
            horizon_ms: 60_000,
            fee: FeeRate::new(0.0005).unwrap(),
            n_price_points: 201,
            pmax_total: 0.05,
            keep_values: false,
        }
    }
}

impl DpConfig {
    pub fn window_steps(&self) -> usize {
        (self.t_w_ms / self.delta_ms) as usize
    }

    pub fn horizon_steps(&self) -> usize {
        (self.horizon_ms / self.delta_ms) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_ms == 0 {
            return Err(Error::Config("delta_ms must be positive".into()));
        }
        if !self.t_w_ms.is_multiple_of(self.delta_ms)
            || !self.horizon_ms.is_multiple_of(self.delta_ms)
        {
            return Err(Error::Config(format!(
                "t_w_ms {} and horizon_ms {} must be multiples of delta_ms {}",
                self.t_w_ms, self.horizon_ms, self.delta_ms
            )));
        }
        if self.t_w_ms < self.delta_ms {
            return Err(Error::Config("t_w_ms must be at least one step".into()));
        }
        if self.horizon_ms < self.t_w_ms {
            return Err(Error::Config("horizon_ms must be at least t_w_ms".into()));
        }
        if self.n_price_points.is_multiple_of(2) || self.n_price_points < 3 {
            return Err(Error::Config(format!(
                "n_price_points must be odd and >= 3, got {}",
                self.n_price_points
            )));
        }
        if !(self.pmax_total.is_finite() && self.pmax_total > 0.0) {
            return Err(Error::Config(format!(
                "pmax_total must be positive, got {}",
                self.pmax_total
            )));
        }
        Ok(())
    }
}

/// Log-spaced price-ratio grid, symmetric about ratio 1. With a nonzero fee
/// the no-trade band edges are exact grid points at center +- band_m.
#[derive(Debug, Clone)]
pub struct PriceGrid {
    points: Vec<f64>,
    log_step: f64,
    center: usize,
    band_m: usize,
}

impl PriceGrid {
    fn build(n: usize, pmax_total: f64, fee: FeeRate) -> Result<PriceGrid> {
        let half = (n - 1) / 2;
        let h_target = (1.0 + pmax_total).ln() / half as f64;
        let (log_step, band_m) = if fee.get() == 0.0 {
            (h_target, 0)
        } else {
            if half < 2 {
                return Err(Error::Config(
                    "need at least 5 price points to represent a fee band".into(),
                ));
            }
            let edge = -(1.0 - fee.get()).ln();
            let m = ((edge / h_target).round() as i64).clamp(1, half as i64 - 1) as usize;
            let h = edge / m as f64;
            if h < h_target / 3.0 {
                log::warn!(
                    "fee band much narrower than requested spacing; grid half-width \
                     shrinks to {:.2e}",
                    (half as f64 * h).exp_m1()
                );
            }
            (h, m)
        };
        let points: Vec<f64> = (0..n)
            .map(|i| ((i as f64 - half as f64) * log_step).exp())
            .collect();
        if PriceRatio::new(points[0]).is_err() || PriceRatio::new(points[n - 1]).is_err() {
            return Err(Error::Config("grid exceeds the supported price-ratio range".into()));
        }
        Ok(PriceGrid { points, log_step, center: half, band_m })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn band_m(&self) -> usize {
        self.band_m
    }

    /// Index of the grid point nearest in log space, clamped to the grid.
    pub fn nearest(&self, p: f64) -> usize {
        let s = (p.ln() / self.log_step).round() + self.center as f64;
        s.clamp(0.0, (self.n() - 1) as f64) as usize
    }

    /// Where the maximal arbitrage sends cell i: its index clamped to the
    /// band [center - band_m, center + band_m].
    fn arb_target(&self, i: usize) -> usize {
        i.clamp(self.center - self.band_m, self.center + self.band_m)
    }
}

/// Transition stencil in grid-index space. Each support ratio lands at log
/// offset ln(r)/h, split linearly between the two neighboring integer
/// shifts (or snapped when it is within 1e-9 of one).
struct Kernel {
    d_min: i64,
    w: Vec<f64>,
}

impl Kernel {
    fn build(dist: &PriceChangeDistribution, log_step: f64) -> Kernel {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        let mut parts: Vec<(i64, f64)> = Vec::with_capacity(dist.len() * 2);
        for (&r, &q) in dist.ratios().iter().zip(dist.probs()) {
            let c = r.ln() / log_step;
            if (c - c.round()).abs() < 1e-9 {
                parts.push((c.round() as i64, q));
            } else {
                let d = c.floor();
                let frac = c - d;
                parts.push((d as i64, q * (1.0 - frac)));
                parts.push((d as i64 + 1, q * frac));
            }
        }
        for &(d, _) in &parts {
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let mut w = vec![0.0; (hi - lo + 1) as usize];
        for (d, q) in parts {
            w[(d - lo) as usize] += q;
        }
        Kernel { d_min: lo, w }
    }

    fn d_max(&self) -> i64 {
        self.d_min + self.w.len() as i64 - 1
    }

    /// Probability mass that cell i would push past the grid ends.
    fn clamped_mass(&self, i: usize, n: usize) -> f64 {
        self.w
            .iter()
            .enumerate()
            .filter(|&(t, _)| {
                let d = self.d_min + t as i64;
                let j = i as i64 + d;
                j < 0 || j >= n as i64
            })
            .map(|(_, &q)| q)
            .sum()
    }
}

/// Expectation of each row cell under the kernel, holding values constant
/// beyond the grid ends (the gap is clamped at the edge of the modeled
/// range).
fn convolve_clamped(row: &[f64], kernel: &Kernel, out: &mut [f64]) {
    let n = row.len();
    let pad_l = (-kernel.d_min).max(0) as usize;
    let pad_r = kernel.d_max().max(0) as usize;
    let mut ext = Vec::with_capacity(pad_l + n + pad_r);
    ext.extend(std::iter::repeat_n(row[0], pad_l));
    ext.extend_from_slice(row);
    ext.extend(std::iter::repeat_n(row[n - 1], pad_r));
    let off = (pad_l as i64 + kernel.d_min) as usize;
    for (i, o) in out.iter_mut().enumerate() {
        let base = i + off;
        let mut acc = 0.0;
        for (t, &w) in kernel.w.iter().enumerate() {
            acc += w * ext[base + t];
        }
        *o = acc;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics {
    /// Largest |arb - wait| seen at any state where both actions exist.
    pub max_action_gap: f64,
    /// States (interior rows, non-terminal layers) with positive immediate
    /// profit, and how many of them the policy waits at.
    pub profitable_interior_states: u64,
    pub wait_at_profitable_interior: u64,
    /// Largest per-step probability mass any cell pushes past a grid end.
    pub max_clamped_mass: f64,
    pub solve_seconds: f64,
}

impl SolveDiagnostics {
    pub fn wait_fraction_at_profitable(&self) -> f64 {
        if self.profitable_interior_states == 0 {
            return 0.0;
        }
        self.wait_at_profitable_interior as f64 / self.profitable_interior_states as f64
    }
}

fn bit_index(n: usize, rows: usize, i: usize, j: usize, k: usize) -> usize {
    (k * rows + j) * n + i
}

/// Solved policy and values.
pub struct PolicyTables {
    config: DpConfig,
    grid: PriceGrid,
    dist: PriceChangeDistribution,
    profit: Vec<f64>,
    /// Action bits indexed (layer, row, cell); set = Arb.
    action_bits: Vec<u64>,
    /// Layer 0 values, rows-by-cells.
    value_t0: Vec<f64>,
    /// Full cube [k][j][i], only with `keep_values`.
    values: Option<Vec<f64>>,
    pub diagnostics: SolveDiagnostics,
}

/// Runs backward induction for `config` under one-step changes `dist`.
///
/// The distribution's step must match `delta_ms`. Support ratios wider than
/// the grid are tolerated; their mass clamps at the ends and shows up in
/// `diagnostics.max_clamped_mass`.
pub fn solve(config: &DpConfig, dist: &PriceChangeDistribution) -> Result<PolicyTables> {
    config.validate()?;
    if dist.step_ms() != config.delta_ms {
        return Err(Error::Config(format!(
            "distribution step {}ms does not match delta_ms {}ms",
            dist.step_ms(),
            config.delta_ms
        )));
    }
    let started = Instant::now();
    let grid = PriceGrid::build(config.n_price_points, config.pmax_total, config.fee)?;
    let n = grid.n();
    let w_steps = config.window_steps();
    let k_steps = config.horizon_steps();
    let rows = w_steps + 1;

    let profit: Vec<f64> = grid
        .points()
        .iter()
        .map(|&p| cpmm::arb_profit(PriceRatio::new(p).unwrap(), config.fee))
        .collect();
    let poolval: Vec<f64> = grid
        .points()
        .iter()
        .map(|&p| cpmm::pool_val_factor(PriceRatio::new(p).unwrap(), config.fee))
        .collect();
    let iarb: Vec<usize> = (0..n).map(|i| grid.arb_target(i)).collect();

    let kernel = Kernel::build(dist, grid.log_step());
    if kernel.d_max().unsigned_abs() as usize >= n || kernel.d_min.unsigned_abs() as usize >= n {
        log::warn!("one-step support is wider than the whole price grid");
    }
    let max_clamped_mass = (0..n)
        .map(|i| kernel.clamped_mass(i, n))
        .fold(0.0, f64::max);

    let n_states = (k_steps + 1) * rows * n;
    let mut action_bits = vec![0u64; n_states.div_ceil(64)];
    let mut values_full = if config.keep_values {
        Some(vec![0.0f64; n_states])
    } else {
        None
    };

    // Terminal layer: take the profit if there is any.
    let mut v_next: Vec<f64> = Vec::with_capacity(rows * n);
    for _ in 0..rows {
        v_next.extend_from_slice(&profit);
    }
    for j in 0..rows {
        for (i, &pi) in profit.iter().enumerate() {
            if pi > 0.0 {
                let s = bit_index(n, rows, i, j, k_steps);
                action_bits[s / 64] |= 1 << (s % 64);
            }
        }
    }
    if let Some(vals) = values_full.as_mut() {
        vals[k_steps * rows * n..].copy_from_slice(&v_next);
    }

    let mut v_cur = vec![0.0f64; rows * n];
    let mut conv = vec![0.0f64; rows * n];
    let mut max_gap = 0.0f64;
    let mut profitable: u64 = 0;
    let mut waited: u64 = 0;

    for k in (0..k_steps).rev() {
        // conv[j'] = E[V_next(p*r, j')] for j' = 1..=W; row 0 stays unused.
        {
            let (_, tail) = conv.split_at_mut(n);
            let src = &v_next;
            let work = (rows - 1) * n * kernel.w.len();
            if work >= 64 * 1024 {
                tail.par_chunks_mut(n).enumerate().for_each(|(jm1, out)| {
                    let j = jm1 + 1;
                    convolve_clamped(&src[j * n..(j + 1) * n], &kernel, out);
                });
            } else {
                for (jm1, out) in tail.chunks_mut(n).enumerate() {
                    let j = jm1 + 1;
                    convolve_clamped(&src[j * n..(j + 1) * n], &kernel, out);
                }
            }
        }
        let cont = &conv[n..2 * n]; // fresh-window continuation, row j' = 1
        for i in 0..n {
            let arb_v = profit[i] + poolval[i] * cont[iarb[i]];
            for j in 0..rows {
                let s = bit_index(n, rows, i, j, k);
                if j == w_steps {
                    // Window expired: act now, then start over.
                    v_cur[j * n + i] = arb_v;
                    action_bits[s / 64] |= 1 << (s % 64);
                } else {
                    let wait_v = conv[(j + 1) * n + i];
                    let gap = (arb_v - wait_v).abs();
                    if gap > max_gap {
                        max_gap = gap;
                    }
                    if profit[i] > 0.0 {
                        profitable += 1;
                        if arb_v <= wait_v {
                            waited += 1;
                        }
                    }
                    if arb_v > wait_v {
                        v_cur[j * n + i] = arb_v;
                        action_bits[s / 64] |= 1 << (s % 64);
                    } else {
                        // Ties wait: acting brings no strict gain.
                        v_cur[j * n + i] = wait_v;
                    }
                }
            }
        }
        if let Some(vals) = values_full.as_mut() {
            vals[k * rows * n..(k + 1) * rows * n].copy_from_slice(&v_cur);
        }
        std::mem::swap(&mut v_next, &mut v_cur);
    }

    Ok(PolicyTables {
        config: *config,
        grid,
        dist: dist.clone(),
        profit,
        action_bits,
        value_t0: v_next,
        values: values_full,
        diagnostics: SolveDiagnostics {
            max_action_gap: max_gap,
            profitable_interior_states: profitable,
            wait_at_profitable_interior: waited,
            max_clamped_mass,
            solve_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

impl PolicyTables {
    pub fn config(&self) -> &DpConfig {
        &self.config
    }

    pub fn grid(&self) -> &PriceGrid {
        &self.grid
    }

    pub fn dist(&self) -> &PriceChangeDistribution {
        &self.dist
    }

    fn state_indices(&self, t_w_ms: u64, t_ms: u64) -> Result<(usize, usize)> {
        let d = self.config.delta_ms;
        if !t_w_ms.is_multiple_of(d) || !t_ms.is_multiple_of(d) {
            return Err(Error::Domain(format!(
                "t_w_ms {t_w_ms} and t_ms {t_ms} must be multiples of delta_ms {d}"
            )));
        }
        let j = (t_w_ms / d) as usize;
        let k = (t_ms / d) as usize;
        if j > self.config.window_steps() {
            return Err(Error::Domain(format!(
                "t_w_ms {t_w_ms} exceeds the window {}ms",
                self.config.t_w_ms
            )));
        }
        if k > self.config.horizon_steps() {
            return Err(Error::Domain(format!(
                "t_ms {t_ms} exceeds the horizon {}ms",
                self.config.horizon_ms
            )));
        }
        Ok((j, k))
    }

    pub fn action_by_index(&self, i: usize, j: usize, k: usize) -> Action {
        let s = bit_index(self.grid.n(), self.config.window_steps() + 1, i, j, k);
        if self.action_bits[s / 64] >> (s % 64) & 1 == 1 {
            Action::Arb
        } else {
            Action::Wait
        }
    }

    /// Policy lookup: the price snaps to the nearest grid point in log
    /// space, times must be exact multiples of the step.
    pub fn decide(&self, p: f64, t_w_ms: u64, t_ms: u64) -> Result<Action> {
        let p = PriceRatio::new(p)?;
        let (j, k) = self.state_indices(t_w_ms, t_ms)?;
        Ok(self.action_by_index(self.grid.nearest(p.get()), j, k))
    }

    fn layer(&self, k: usize) -> Result<LayerRef<'_>> {
        let rows = self.config.window_steps() + 1;
        let n = self.grid.n();
        if let Some(vals) = &self.values {
            return Ok(LayerRef::Full(&vals[k * rows * n..(k + 1) * rows * n]));
        }
        if k == 0 {
            return Ok(LayerRef::Full(&self.value_t0));
        }
        if k == self.config.horizon_steps() {
            return Ok(LayerRef::Terminal(&self.profit));
        }
        Err(Error::Unavailable(format!(
            "values at t = {}ms were not retained; solve with keep_values",
            k as u64 * self.config.delta_ms
        )))
    }

    fn interp(&self, row: &[f64], p: f64) -> f64 {
        let x = p.ln() / self.grid.log_step() + self.grid.center() as f64;
        let x = x.clamp(0.0, (self.grid.n() - 1) as f64);
        let i0 = x.floor() as usize;
        if i0 + 1 >= self.grid.n() {
            return row[self.grid.n() - 1];
        }
        let frac = x - i0 as f64;
        row[i0] * (1.0 - frac) + row[i0 + 1] * frac
    }

    /// Value of state (p, t_w, t) in units of current pool value, linearly
    /// interpolated in log price. Away from t = 0 and the terminal layer
    /// this needs `keep_values`.
    pub fn value(&self, p: f64, t_w_ms: u64, t_ms: u64) -> Result<f64> {
        let p = PriceRatio::new(p)?;
        let (j, k) = self.state_indices(t_w_ms, t_ms)?;
        let n = self.grid.n();
        let row = match self.layer(k)? {
            LayerRef::Full(layer) => &layer[j * n..(j + 1) * n],
            LayerRef::Terminal(profit) => profit,
        };
        Ok(self.interp(row, p.get()))
    }

    /// Expected value of waiting one step from (p, t_w, t): the window
    /// advances, the ratio moves one draw, clamped at the grid ends exactly
    /// as in the solve.
    pub fn wait_value(&self, p: f64, t_w_ms: u64, t_ms: u64) -> Result<f64> {
        let (j, k) = self.state_indices(t_w_ms, t_ms)?;
        if j >= self.config.window_steps() {
            return Err(Error::Domain("no wait action once the window has expired".into()));
        }
        if k >= self.config.horizon_steps() {
            return Err(Error::Domain("no wait action at the terminal layer".into()));
        }
        let p = PriceRatio::new(p)?;
        let next_tw = t_w_ms + self.config.delta_ms;
        let next_t = t_ms + self.config.delta_ms;
        let lo = self.grid.points()[0];
        let hi = self.grid.points()[self.grid.n() - 1];
        let mut acc = 0.0;
        for (&r, &q) in self.dist.ratios().iter().zip(self.dist.probs()) {
            let moved = (p.get() * r).clamp(lo, hi);
            acc += q * self.value(moved, next_tw, next_t)?;
        }
        Ok(acc)
    }

    /// Value of arbitraging now at (p, t_w, t): immediate profit plus the
    /// rescaled continuation with a fresh window, evaluated one step later.
    pub fn arb_value(&self, p: f64, t_w_ms: u64, t_ms: u64) -> Result<f64> {
        let pr = PriceRatio::new(p)?;
        let (_, k) = self.state_indices(t_w_ms, t_ms)?;
        let fee = self.config.fee;
        let immediate = cpmm::arb_profit(pr, fee);
        if k >= self.config.horizon_steps() {
            return Ok(immediate);
        }
        let after = cpmm::p_arb(pr, fee).get();
        let cont = self.wait_value(after, 0, t_ms)?;
        Ok(immediate + cpmm::pool_val_factor(pr, fee) * cont)
    }

    /// arb_value - wait_value. Positive means acting immediately beats
    /// waiting at that state.
    pub fn advantage(&self, p: f64, t_w_ms: u64, t_ms: u64) -> Result<f64> {
        Ok(self.arb_value(p, t_w_ms, t_ms)? - self.wait_value(p, t_w_ms, t_ms)?)
    }

    /// Writes `p,t_w_ms,t_ms,value,action` rows. Without `full` only the
    /// t = 0 layer is written; with it, every state (needs `keep_values`).
    pub fn export_policy_csv<W: Write>(&self, w: &mut W, full: bool) -> Result<()> {
        let n = self.grid.n();
        let rows = self.config.window_steps() + 1;
        let d = self.config.delta_ms;
        writeln!(w, "p,t_w_ms,t_ms,value,action")?;
        let layers: Vec<usize> = if full {
            if self.values.is_none() {
                return Err(Error::Unavailable(
                    "full policy export needs a solve with keep_values".into(),
                ));
            }
            (0..=self.config.horizon_steps()).collect()
        } else {
            vec![0]
        };
        for k in layers {
            let layer = self.layer(k)?;
            for j in 0..rows {
                for i in 0..n {
                    let v = match layer {
                        LayerRef::Full(vals) => vals[j * n + i],
                        LayerRef::Terminal(profit) => profit[i],
                    };
                    writeln!(
                        w,
                        "{},{},{},{},{}",
                        self.grid.points()[i],
                        j as u64 * d,
                        k as u64 * d,
                        v,
                        self.action_by_index(i, j, k).as_str()
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Flat binary value dump (needs `keep_values`). Layout, little-endian:
    /// magic `ARBVAL01`, then u64 counts (price points, window rows, time
    /// layers), then the grid points as f64, then values ordered
    /// [time][window][price] with time ascending.
    pub fn export_values_bin<W: Write>(&self, w: &mut W) -> Result<()> {
        let vals = self.values.as_ref().ok_or_else(|| {
            Error::Unavailable("binary value export needs a solve with keep_values".into())
        })?;
        w.write_all(b"ARBVAL01")?;
        let rows = self.config.window_steps() + 1;
        for c in [self.grid.n() as u64, rows as u64, self.config.horizon_steps() as u64 + 1] {
            w.write_all(&c.to_le_bytes())?;
        }
        for &p in self.grid.points() {
            w.write_all(&p.to_le_bytes())?;
        }
        for &v in vals {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

enum LayerRef<'a> {
    Full(&'a [f64]),
    /// Terminal layer: every row equals the immediate profit.
    Terminal(&'a [f64]),
}
