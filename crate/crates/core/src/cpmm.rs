//! Exact arbitrage math for a constant-product pool with reserves (X, Y)
//! and a proportional fee charged on trade input.
//!
//! Everything is expressed in terms of the price ratio p = P / (Y/X), the
//! external price over the pool's quoted price. The fee creates a no-trade
//! band [1-f, 1/(1-f)] around p = 1; outside it the arbitrageur trades the
//! pool's marginal price (fee included) onto the external price.

use crate::error::{Error, Result};

/// Proportional fee on trade input, in [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FeeRate(f64);

impl FeeRate {
    pub const ZERO: FeeRate = FeeRate(0.0);

    pub fn new(f: f64) -> Result<Self> {
        if !f.is_finite() || !(0.0..1.0).contains(&f) {
            return Err(Error::Domain(format!("fee rate must be in [0, 1), got {f}")));
        }
        Ok(FeeRate(f))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Lower edge of the no-trade band, 1 - f.
    pub fn band_lo(self) -> f64 {
        1.0 - self.0
    }

    /// Upper edge of the no-trade band, 1 / (1 - f).
    pub fn band_hi(self) -> f64 {
        1.0 / (1.0 - self.0)
    }
}

/// Ratio of external price to pool price. Kept within [1e-6, 1e6]; ratios
/// outside that range are treated as data errors rather than market states.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PriceRatio(f64);

impl PriceRatio {
    pub const MIN: f64 = 1e-6;
    pub const MAX: f64 = 1e6;

    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || !(Self::MIN..=Self::MAX).contains(&p) {
            return Err(Error::Domain(format!(
                "price ratio must be finite in [{:e}, {:e}], got {p}",
                Self::MIN,
                Self::MAX
            )));
        }
        Ok(PriceRatio(p))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Constant-product pool reserves: X of the risky asset, Y of the numeraire.
/// The quoted price is Y/X and the pool's mark-to-market value at its own
/// price is 2Y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolState {
    pub x: f64,
    pub y: f64,
}

impl PoolState {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0) {
            return Err(Error::Domain(format!(
                "pool reserves must be finite and positive, got x={x}, y={y}"
            )));
        }
        Ok(PoolState { x, y })
    }

    /// Quoted (marginal, pre-fee) pool price Y/X.
    pub fn price(&self) -> f64 {
        self.y / self.x
    }

    /// Mark-to-market value in numeraire at an external price.
    pub fn value_at(&self, price: f64) -> f64 {
        self.x * price + self.y
    }
}

/// The profit-maximizing arbitrage trade against a pool. Signs follow the
/// arbitrageur's flows with the pool: `dx > 0` means the arbitrageur
/// receives risky asset, `dy > 0` means the arbitrageur pays numeraire.
/// Both are the arbitrageur's totals, fee included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArbTrade {
    pub new_x: f64,
    pub new_y: f64,
    pub dx: f64,
    pub dy: f64,
    /// Arbitrage profit in numeraire at the external price, never negative.
    pub profit_abs: f64,
}

impl ArbTrade {
    fn null(pool: &PoolState) -> ArbTrade {
        ArbTrade {
            new_x: pool.x,
            new_y: pool.y,
            dx: 0.0,
            dy: 0.0,
            profit_abs: 0.0,
        }
    }
}

/// Post-arbitrage price ratio: p clamped to the no-trade band
/// [1-f, 1/(1-f)]. Inside the band (edges included) the ratio is unchanged.
pub fn p_arb(p: PriceRatio, fee: FeeRate) -> PriceRatio {
    let p = p.get();
    let lo = fee.band_lo();
    let hi = fee.band_hi();
    if p > hi {
        PriceRatio(hi)
    } else if p < lo {
        PriceRatio(lo)
    } else {
        PriceRatio(p)
    }
}

/// Maximal arbitrage profit as a fraction of pool value 2Y.
///
/// Zero on the no-trade band, with matching value and slope at both edges,
/// and convex in p. The two branches come from optimizing the trade size
/// with the fee charged on input: buying risky when p is above the band,
/// selling when below.
pub fn arb_profit(p: PriceRatio, fee: FeeRate) -> f64 {
    let p = p.get();
    let g = 1.0 - fee.get();
    let lo = fee.band_lo();
    let hi = fee.band_hi();
    let v = if p > hi {
        0.5 * p - (p / g).sqrt() + 0.5 / g
    } else if p < lo {
        0.5 * p / g - (p / g).sqrt() + 0.5
    } else {
        return 0.0;
    };
    v.max(0.0)
}

/// Factor by which pool value (marked at its own quoted price) changes when
/// the maximal arbitrage executes: sqrt(p / p_arb(p)). Equals 1 on the band.
pub fn pool_val_factor(p: PriceRatio, fee: FeeRate) -> f64 {
    (p.get() / p_arb(p, fee).get()).sqrt()
}

/// The profit-maximizing trade against `pool` at external price `price`.
///
/// After the trade the pool's marginal price including the fee equals the
/// external price, so no further profitable trade exists. Returns the null
/// trade when the price ratio is inside the no-trade band.
pub fn maximal_trade(pool: &PoolState, price: f64, fee: FeeRate) -> Result<ArbTrade> {
    if !(price.is_finite() && price > 0.0) {
        return Err(Error::Domain(format!("external price must be positive, got {price}")));
    }
    let p = PriceRatio::new(price / pool.price())?;
    let g = 1.0 - fee.get();
    let k = pool.x * pool.y;

    if p.get() > fee.band_hi() {
        // Arbitrageur buys risky from the pool, paying numeraire. The fee is
        // charged on the numeraire input: reserves gain g*dy.
        let new_x = (k / (g * price)).sqrt();
        let new_y = (k * g * price).sqrt();
        let dx = pool.x - new_x;
        let dy = (new_y - pool.y) / g;
        let profit = (dx * price - dy).max(0.0);
        Ok(ArbTrade { new_x, new_y, dx, dy, profit_abs: profit })
    } else if p.get() < fee.band_lo() {
        // Arbitrageur sells risky to the pool for numeraire; the fee is
        // charged on the risky input, so reserves gain only g times what the
        // arbitrageur pays in.
        let new_x = (k * g / price).sqrt();
        let new_y = (k * price / g).sqrt();
        let dx = -(new_x - pool.x) / g;
        let dy = -(pool.y - new_y);
        let profit = (dx * price - dy).max(0.0);
        Ok(ArbTrade { new_x, new_y, dx, dy, profit_abs: profit })
    } else {
        Ok(ArbTrade::null(pool))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn fee(f: f64) -> FeeRate {
        FeeRate::new(f).unwrap()
    }

    fn ratio(p: f64) -> PriceRatio {
        PriceRatio::new(p).unwrap()
    }

    /// Executes the swap that moves reserves by the arbitrageur paying
    /// `amount` in (fee charged on input), in the stated direction, and
    /// returns the arbitrageur's profit at the external price.
    fn swap_profit(pool: &PoolState, price: f64, f: f64, amount_in: f64, buy_risky: bool) -> f64 {
        let g = 1.0 - f;
        if buy_risky {
            let new_y = pool.y + g * amount_in;
            let new_x = pool.x * pool.y / new_y;
            (pool.x - new_x) * price - amount_in
        } else {
            let new_x = pool.x + g * amount_in;
            let new_y = pool.x * pool.y / new_x;
            (pool.y - new_y) - amount_in * price
        }
    }

    /// Grid search plus ternary refinement over the trade size. The profit
    /// is strictly concave in the input amount, so this pins the optimum.
    fn best_swap_profit(pool: &PoolState, price: f64, f: f64, buy_risky: bool) -> f64 {
        let hi0 = if buy_risky { pool.y * 10.0 } else { pool.x * 10.0 };
        let mut best_a = 0.0;
        let mut best = 0.0;
        for i in 0..=4000 {
            let a = hi0 * i as f64 / 4000.0;
            let v = swap_profit(pool, price, f, a, buy_risky);
            if v > best {
                best = v;
                best_a = a;
            }
        }
        let (mut lo, mut hi) = ((best_a - hi0 / 4000.0).max(0.0), best_a + hi0 / 4000.0);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if swap_profit(pool, price, f, m1, buy_risky) < swap_profit(pool, price, f, m2, buy_risky) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        swap_profit(pool, price, f, 0.5 * (lo + hi), buy_risky)
    }

    #[test]
    fn p_arb_clamps_to_band() {
        assert_eq!(p_arb(ratio(1.21), fee(0.0)).get(), 1.0);
        assert_eq!(p_arb(ratio(1.0001), fee(0.003)).get(), 1.0001);
        assert_eq!(p_arb(ratio(0.9), fee(0.0)).get(), 1.0);
        let f = fee(0.003);
        assert_eq!(p_arb(ratio(2.0), f).get(), f.band_hi());
        assert_eq!(p_arb(ratio(0.5), f).get(), f.band_lo());
        // Band edges are inside the band: inputs come back unchanged.
        assert_eq!(p_arb(ratio(f.band_hi()), f).get(), f.band_hi());
        assert_eq!(p_arb(ratio(f.band_lo()), f).get(), f.band_lo());
    }

    #[test]
    fn arb_profit_known_values() {
        assert_abs_diff_eq!(arb_profit(ratio(1.21), fee(0.0)), 0.005, epsilon = 1e-15);
        // 0.5*1.1 - sqrt(1.1/0.9995) + 0.5/0.9995
        let expect = 0.55 - (1.1f64 / 0.9995).sqrt() + 0.5 / 0.9995;
        assert_relative_eq!(arb_profit(ratio(1.1), fee(0.0005)), expect, max_relative = 1e-15);
        assert_abs_diff_eq!(expect, 1.179e-3, epsilon = 1e-6);
        assert_eq!(arb_profit(ratio(1.0002), fee(0.0005)), 0.0);
    }

    #[test]
    fn arb_profit_zero_exactly_on_band() {
        let f = fee(0.0005);
        assert_eq!(arb_profit(ratio(f.band_lo()), f), 0.0);
        assert_eq!(arb_profit(ratio(f.band_hi()), f), 0.0);
        // Just outside, the true value is quadratic in the distance, so it
        // only rises above f64 rounding noise around 1e-6 away.
        assert!(arb_profit(ratio(f.band_hi() * (1.0 + 1e-6)), f) > 0.0);
        assert!(arb_profit(ratio(f.band_lo() * (1.0 - 1e-6)), f) > 0.0);
    }

    #[test]
    fn arb_profit_smooth_at_band_edges() {
        // Value and slope both vanish at the edges: profit just outside is
        // quadratic in the distance, not linear.
        let f = fee(0.003);
        for edge in [f.band_lo(), f.band_hi()] {
            for eps in [1e-6, 1e-5] {
                let out = if edge > 1.0 { edge + eps } else { edge - eps };
                let v = arb_profit(ratio(out), f);
                assert!(v > 0.0);
                assert!(v < eps * eps, "profit {v} not quadratic near edge {edge}");
            }
        }
    }

    #[test]
    fn arb_profit_convex_and_decreasing_in_fee() {
        let f = fee(0.002);
        let mut prev = f64::INFINITY;
        // Convexity via second differences on a log grid spanning the band.
        let n = 400;
        let h = 0.4 / n as f64;
        let vals: Vec<f64> = (0..=n)
            .map(|i| arb_profit(ratio((-0.2 + i as f64 * h).exp()), f))
            .collect();
        for w in vals.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
        }
        // Higher fee never helps the arbitrageur.
        for f_ in [0.0, 0.0005, 0.003, 0.01, 0.05] {
            let v = arb_profit(ratio(1.3), fee(f_));
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn pool_val_factor_values() {
        assert_relative_eq!(pool_val_factor(ratio(1.21), fee(0.0)), 1.1, max_relative = 1e-15);
        assert_eq!(pool_val_factor(ratio(1.0001), fee(0.003)), 1.0);
        let f = fee(0.01);
        let p = ratio(0.8);
        assert_relative_eq!(
            pool_val_factor(p, f),
            (0.8f64 / f.band_lo()).sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn maximal_trade_no_fee_example() {
        let pool = PoolState::new(100.0, 10_000.0).unwrap();
        let t = maximal_trade(&pool, 121.0, fee(0.0)).unwrap();
        assert_relative_eq!(t.new_x, 1000.0 / 11.0, max_relative = 1e-14);
        assert_relative_eq!(t.new_y, 11_000.0, max_relative = 1e-14);
        assert_relative_eq!(t.dx, 100.0 - 1000.0 / 11.0, max_relative = 1e-12);
        assert_relative_eq!(t.dy, 1000.0, max_relative = 1e-13);
        assert_relative_eq!(t.profit_abs, 100.0, max_relative = 1e-12);
        // Post-trade quoted price equals the external price when f = 0.
        assert_relative_eq!(t.new_y / t.new_x, 121.0, max_relative = 1e-14);
    }

    #[test]
    fn maximal_trade_with_fee_example() {
        let pool = PoolState::new(100.0, 10_000.0).unwrap();
        let t = maximal_trade(&pool, 110.0, fee(0.01)).unwrap();
        assert_relative_eq!(t.profit_abs, 19.159033220905463, max_relative = 1e-12);
        // Invariant preserved (fee accrues inside reserves).
        assert_relative_eq!(t.new_x * t.new_y, 1_000_000.0, max_relative = 1e-12);
        // Marginal price including fee matches the external price.
        assert_relative_eq!(t.new_y / t.new_x / 0.99, 110.0, max_relative = 1e-12);
    }

    #[test]
    fn maximal_trade_in_band_is_null() {
        let pool = PoolState::new(100.0, 10_000.0).unwrap();
        let t = maximal_trade(&pool, 100.2, fee(0.01)).unwrap();
        assert_eq!(t.dx, 0.0);
        assert_eq!(t.dy, 0.0);
        assert_eq!(t.profit_abs, 0.0);
        assert_eq!(t.new_x, 100.0);
    }

    #[test]
    fn maximal_trade_matches_brute_force_both_sides() {
        let pool = PoolState::new(250.0, 41_000.0).unwrap();
        for (price, f) in [
            (190.0, 0.0),
            (190.0, 0.003),
            (175.0, 0.03),
            (130.0, 0.0),
            (130.0, 0.003),
            (145.0, 0.03),
        ] {
            let t = maximal_trade(&pool, price, fee(f)).unwrap();
            let buy_risky = price > pool.price();
            let oracle = best_swap_profit(&pool, price, f, buy_risky);
            assert_relative_eq!(t.profit_abs, oracle, max_relative = 1e-7);
            // The closed form is the true optimum: nudging the input amount
            // either way cannot beat it.
            let amount = if buy_risky { t.dy } else { -t.dx };
            for bump in [0.999, 1.001] {
                assert!(swap_profit(&pool, price, f, amount * bump, buy_risky) <= t.profit_abs);
            }
        }
    }

    #[test]
    fn maximal_trade_downside_marginal_price() {
        let pool = PoolState::new(100.0, 10_000.0).unwrap();
        let f = fee(0.003);
        let t = maximal_trade(&pool, 90.0, f).unwrap();
        assert!(t.dx < 0.0 && t.dy < 0.0);
        // Selling side: pool pays numeraire out, fee on the risky input.
        assert_relative_eq!(t.new_y / t.new_x * 0.997, 90.0, max_relative = 1e-12);
        assert_relative_eq!(t.new_x * t.new_y, 1_000_000.0, max_relative = 1e-12);
    }

    #[test]
    fn domain_guards() {
        assert!(FeeRate::new(1.0).is_err());
        assert!(FeeRate::new(-0.1).is_err());
        assert!(FeeRate::new(f64::NAN).is_err());
        assert!(PriceRatio::new(0.0).is_err());
        assert!(PriceRatio::new(1e-7).is_err());
        assert!(PriceRatio::new(2e6).is_err());
        assert!(PoolState::new(0.0, 1.0).is_err());
        let pool = PoolState::new(100.0, 10_000.0).unwrap();
        assert!(maximal_trade(&pool, -5.0, FeeRate::ZERO).is_err());
        // Ratio guard applies to the implied ratio, not the raw price.
        assert!(maximal_trade(&pool, 1e-5, FeeRate::ZERO).is_err());
    }
}
