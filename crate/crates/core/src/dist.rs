//! Discrete distribution of one-step multiplicative price changes.
//!
//! A distribution is a finite set of ratio/probability pairs with ratios
//! inside [1-pmax, 1+pmax]. It is the single currency between data
//! ingestion, the model generators, the policy solver, and the simulators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Support points with probability below this fraction of the largest
/// probability are dropped at construction and the rest renormalized. They
/// carry no information at f64 precision but would widen convolution
/// stencils and drag boundary effects into every solve.
const SUPPORT_TRUNCATION: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PriceChangeDistribution {
    step_ms: u64,
    pmax: f64,
    ratios: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistJson {
    step_ms: u64,
    pmax: f64,
    bins: Vec<BinJson>,
}

#[derive(Serialize, Deserialize)]
struct BinJson {
    ratio: f64,
    prob: f64,
}

impl PriceChangeDistribution {
    /// Builds a distribution from (ratio, probability) pairs.
    ///
    /// Ratios must be strictly increasing, positive, and within
    /// [1-pmax, 1+pmax]; probabilities must be nonnegative with positive
    /// sum. Probabilities are renormalized to sum to 1 after negligible
    /// support points are dropped.
    pub fn new(step_ms: u64, pmax: f64, pairs: &[(f64, f64)]) -> Result<Self> {
        if step_ms == 0 {
            return Err(Error::Config("step_ms must be positive".into()));
        }
        if !(pmax.is_finite() && pmax > 0.0 && pmax < 1.0) {
            return Err(Error::Domain(format!("pmax must be in (0, 1), got {pmax}")));
        }
        if pairs.is_empty() {
            return Err(Error::Domain("distribution needs at least one support point".into()));
        }
        let lo = 1.0 - pmax;
        let hi = 1.0 + pmax;
        let mut prev = 0.0;
        for &(r, q) in pairs {
            if !(r.is_finite() && q.is_finite()) || q < 0.0 {
                return Err(Error::Domain(format!("bad support point ({r}, {q})")));
            }
            if r < lo - 1e-12 || r > hi + 1e-12 {
                return Err(Error::Domain(format!(
                    "ratio {r} outside [1-pmax, 1+pmax] = [{lo}, {hi}]"
                )));
            }
            if r <= prev {
                return Err(Error::Domain("ratios must be strictly increasing".into()));
            }
            prev = r;
        }
        let max_q = pairs.iter().map(|&(_, q)| q).fold(0.0, f64::max);
        if max_q <= 0.0 {
            return Err(Error::Domain("probabilities sum to zero".into()));
        }
        let cut = SUPPORT_TRUNCATION * max_q;
        let kept: Vec<(f64, f64)> = pairs.iter().copied().filter(|&(_, q)| q >= cut).collect();
        let total: f64 = kept.iter().map(|&(_, q)| q).sum();
        let ratios = kept.iter().map(|&(r, _)| r).collect();
        let probs = kept.iter().map(|&(_, q)| q / total).collect();
        Ok(PriceChangeDistribution { step_ms, pmax, ratios, probs })
    }

    /// A distribution that never moves the price.
    pub fn point_mass(step_ms: u64, pmax: f64) -> Result<Self> {
        Self::new(step_ms, pmax, &[(1.0, 1.0)])
    }

    pub fn step_ms(&self) -> u64 {
        self.step_ms
    }

    pub fn pmax(&self) -> f64 {
        self.pmax
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    /// E[r], the expected one-step ratio.
    pub fn mean(&self) -> f64 {
        self.ratios.iter().zip(&self.probs).map(|(r, q)| r * q).sum()
    }

    /// E[sqrt(r)]. This is the factor by which the expected value (relative
    /// to pool value) of a held arbitrage opportunity compounds per step.
    pub fn root_mean(&self) -> f64 {
        self.ratios.iter().zip(&self.probs).map(|(r, q)| r.sqrt() * q).sum()
    }

    /// Variance of ln r.
    pub fn log_variance(&self) -> f64 {
        let m: f64 = self.ratios.iter().zip(&self.probs).map(|(r, q)| r.ln() * q).sum();
        self.ratios
            .iter()
            .zip(&self.probs)
            .map(|(r, q)| {
                let d = r.ln() - m;
                d * d * q
            })
            .sum()
    }

    /// Nudges probabilities so that the f64 sums of both the probabilities
    /// and the mean ratio are exactly 1.0.
    ///
    /// Model generators target a unit mean analytically, but rounding in the
    /// CDF evaluations leaves a residual of order 1e-16 per step that a
    /// long-horizon solve compounds into a visible drift. A closed-form
    /// two-point transfer between the point nearest ratio 1 and the farthest
    /// point removes the bulk; because the rounded sums move on staircases
    /// whose treads need not contain 1.0 for any step that transfer can
    /// produce, a single-ulp walk on one probability at a time finishes the
    /// job when the transfer alone dithers.
    pub fn with_exact_unit_mean(mut self) -> Result<Self> {
        if self.len() == 1 {
            if self.ratios[0] != 1.0 {
                return Err(Error::Domain(
                    "cannot set unit mean on a point mass away from 1".into(),
                ));
            }
            self.probs[0] = 1.0;
            return Ok(self);
        }
        let c = self
            .ratios
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1.0).abs().partial_cmp(&(b.1 - 1.0).abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let j = self
            .ratios
            .iter()
            .enumerate()
            .max_by(|a, b| {
                (a.1 - self.ratios[c])
                    .abs()
                    .partial_cmp(&(b.1 - self.ratios[c]).abs())
                    .unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        let (rc, rj) = (self.ratios[c], self.ratios[j]);
        if rc == rj {
            return Err(Error::Domain("degenerate support, cannot adjust mean".into()));
        }
        for _ in 0..4 {
            let s: f64 = self.probs.iter().sum();
            let m: f64 = self.mean();
            if s == 1.0 && m == 1.0 {
                return Ok(self);
            }
            let dj = ((1.0 - m) - rc * (1.0 - s)) / (rj - rc);
            let dc = (1.0 - s) - dj;
            self.probs[c] += dc;
            self.probs[j] += dj;
            if self.probs[c] < 0.0 || self.probs[j] < 0.0 {
                return Err(Error::Domain(
                    "unit-mean correction would need negative probability".into(),
                ));
            }
        }
        if self.probs.iter().sum::<f64>() == 1.0 && self.mean() == 1.0 {
            return Ok(self);
        }
        // Both residuals are now within an ulp or two. Larger probabilities
        // have the longest reach per ulp, so try knobs in descending order;
        // the first value that lands both sums on exactly 1.0 wins.
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.probs[b].partial_cmp(&self.probs[a]).unwrap());
        for &u in order.iter().take(6) {
            let base = self.probs[u];
            let (mut up, mut down) = (base, base);
            for _ in 0..512 {
                up = up.next_up();
                down = down.next_down();
                for x in [up, down] {
                    if x <= 0.0 {
                        continue;
                    }
                    self.probs[u] = x;
                    if self.probs.iter().sum::<f64>() == 1.0 && self.mean() == 1.0 {
                        return Ok(self);
                    }
                }
            }
            self.probs[u] = base;
        }
        Err(Error::Domain("unit-mean correction did not converge".into()))
    }

    pub fn to_json<W: std::io::Write>(&self, w: W) -> Result<()> {
        let doc = DistJson {
            step_ms: self.step_ms,
            pmax: self.pmax,
            bins: self
                .ratios
                .iter()
                .zip(&self.probs)
                .map(|(&ratio, &prob)| BinJson { ratio, prob })
                .collect(),
        };
        serde_json::to_writer_pretty(w, &doc)?;
        Ok(())
    }

    pub fn from_json<R: std::io::Read>(r: R) -> Result<Self> {
        let doc: DistJson = serde_json::from_reader(r)?;
        let pairs: Vec<(f64, f64)> = doc.bins.iter().map(|b| (b.ratio, b.prob)).collect();
        let sum: f64 = pairs.iter().map(|&(_, q)| q).sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Format(format!("bin probabilities sum to {sum}, expected 1")));
        }
        Self::new(doc.step_ms, doc.pmax, &pairs)
    }
}
