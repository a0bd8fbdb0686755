//! Synthetic price-change models: a discretized geometric Brownian motion
//! and a mean-reverting log-return process, plus seeded path sampling.
//!
//! All randomness goes through ChaCha8 keyed by an explicit seed, with the
//! stream id selecting independent substreams (one per simulated minute),
//! so results are reproducible regardless of thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dist::PriceChangeDistribution;
use crate::error::{Error, Result};

pub const MS_PER_DAY: f64 = 86_400_000.0;

/// Geometric Brownian motion parameters. `drift_daily` is the daily drift
/// of log price in excess of the variance correction; at the default 0 the
/// one-step ratio has expectation exactly 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams {
    pub sigma_daily: f64,
    pub drift_daily: f64,
}

impl GbmParams {
    pub fn martingale(sigma_daily: f64) -> Self {
        GbmParams { sigma_daily, drift_daily: 0.0 }
    }

    pub fn sigma_step(&self, step_ms: u64) -> f64 {
        self.sigma_daily * (step_ms as f64 / MS_PER_DAY).sqrt()
    }

    pub fn mu_step(&self, step_ms: u64) -> f64 {
        let s = self.sigma_step(step_ms);
        self.drift_daily * (step_ms as f64 / MS_PER_DAY) - 0.5 * s * s
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_daily.is_finite() && self.sigma_daily >= 0.0) {
            return Err(Error::Domain(format!(
                "sigma_daily must be finite and nonnegative, got {}",
                self.sigma_daily
            )));
        }
        if !self.drift_daily.is_finite() {
            return Err(Error::Domain("drift_daily must be finite".into()));
        }
        Ok(())
    }
}

/// Discretizes the one-step GBM ratio onto points exp(s*spacing) for
/// s in -half..=half, with each point taking the normal probability mass of
/// the log-space bin around it and the end points absorbing the tails.
pub fn gbm_distribution_on_log_grid(
    params: &GbmParams,
    step_ms: u64,
    spacing: f64,
    half: usize,
) -> Result<PriceChangeDistribution> {
    params.validate()?;
    if !(spacing.is_finite() && spacing > 0.0) || half == 0 {
        return Err(Error::Config(format!(
            "need positive spacing and half width, got {spacing}, {half}"
        )));
    }
    let pmax = (half as f64 * spacing).exp_m1();
    if pmax >= 1.0 {
        return Err(Error::Config("log grid spans a ratio of 2 or more".into()));
    }
    let sigma = params.sigma_step(step_ms);
    let mu = params.mu_step(step_ms);
    if sigma == 0.0 {
        // Degenerate: all mass at the drifted point, snapped to the grid.
        let s = (mu / spacing).round() as i64;
        let s = s.clamp(-(half as i64), half as i64);
        return PriceChangeDistribution::new(step_ms, pmax, &[((s as f64 * spacing).exp(), 1.0)]);
    }
    let normal = Normal::new(mu, sigma).expect("positive sigma");
    let n = 2 * half + 1;
    let mut pairs = Vec::with_capacity(n);
    let mut prev_cdf = 0.0;
    for s in -(half as i64)..=(half as i64) {
        let upper = if s == half as i64 {
            1.0
        } else {
            normal.cdf((s as f64 + 0.5) * spacing)
        };
        pairs.push(((s as f64 * spacing).exp(), upper - prev_cdf));
        prev_cdf = upper;
    }
    let tail = pairs[0].1 + pairs[n - 1].1;
    if tail > 0.01 {
        log::warn!(
            "gbm discretization folds {:.3}% of probability into its end bins; \
             widen the grid or shorten the step",
            tail * 100.0
        );
    }
    PriceChangeDistribution::new(step_ms, pmax, &pairs)
}

/// `gbm_distribution_on_log_grid` with the grid described by its total
/// half-width `pmax` and an odd point count.
pub fn gbm_distribution(
    params: &GbmParams,
    step_ms: u64,
    pmax: f64,
    n_points: usize,
) -> Result<PriceChangeDistribution> {
    if n_points < 3 || n_points.is_multiple_of(2) {
        return Err(Error::Config(format!("n_points must be odd and >= 3, got {n_points}")));
    }
    if !(pmax.is_finite() && pmax > 0.0 && pmax < 1.0) {
        return Err(Error::Domain(format!("pmax must be in (0, 1), got {pmax}")));
    }
    let half = (n_points - 1) / 2;
    let spacing = (1.0 + pmax).ln() / half as f64;
    gbm_distribution_on_log_grid(params, step_ms, spacing, half)
}

/// A multiplicative price path: the price after step i is the running
/// product of `ratios[..=i]` times the starting price.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub step_ms: u64,
    pub ratios: Vec<f64>,
}

/// RNG for path `stream` under a base seed. Streams are independent, so
/// minute i of a simulation can be generated on any thread.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Precomputed inverse-CDF sampler for a discrete change distribution.
pub struct PathSampler<'a> {
    dist: &'a PriceChangeDistribution,
    cdf: Vec<f64>,
}

impl<'a> PathSampler<'a> {
    pub fn new(dist: &'a PriceChangeDistribution) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = dist
            .probs()
            .iter()
            .map(|q| {
                acc += q;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        PathSampler { dist, cdf }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        self.dist.ratios()[idx]
    }

    pub fn sample_path<R: Rng>(&self, n_steps: usize, rng: &mut R) -> PricePath {
        let ratios = (0..n_steps).map(|_| self.draw(rng)).collect();
        PricePath { step_ms: self.dist.step_ms(), ratios }
    }
}

/// Draws `n_steps` one-step ratios from `dist` under the given seed
/// (stream 0).
pub fn sample_path(dist: &PriceChangeDistribution, n_steps: usize, seed: u64) -> PricePath {
    let mut rng = path_rng(seed, 0);
    PathSampler::new(dist).sample_path(n_steps, &mut rng)
}

/// Mean-reverting log returns: l[t] = -kappa * l[t-1] + sigma_step * z[t]
/// with l[-1] = 0, ratios exp(l[t]). Lag-1 autocorrelation of the log
/// returns is -kappa; kappa = 0 recovers independent steps.
pub fn mean_reverting_path<R: Rng>(
    sigma_step: f64,
    kappa: f64,
    step_ms: u64,
    n_steps: usize,
    rng: &mut R,
) -> Result<PricePath> {
    if !(sigma_step.is_finite() && sigma_step >= 0.0) {
        return Err(Error::Domain(format!("sigma_step must be nonnegative, got {sigma_step}")));
    }
    if !(kappa.is_finite() && (0.0..1.0).contains(&kappa)) {
        return Err(Error::Domain(format!("kappa must be in [0, 1), got {kappa}")));
    }
    let mut l = 0.0f64;
    let ratios = (0..n_steps)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            l = -kappa * l + sigma_step * z;
            l.exp()
        })
        .collect();
    Ok(PricePath { step_ms, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn sigma_step_scaling() {
        let p = GbmParams::martingale(0.042);
        let expect = 0.042 * (10.0f64 / MS_PER_DAY).sqrt();
        assert_relative_eq!(p.sigma_step(10), expect, max_relative = 1e-15);
        assert_abs_diff_eq!(expect, 1.4289e-5, epsilon = 1e-9);
    }

    #[test]
    fn gbm_distribution_is_martingale_and_matches_variance() {
        // Spacing well below sigma so discretization error is tiny.
        let params = GbmParams::martingale(0.10);
        let d = gbm_distribution(&params, 100, 0.001, 2001).unwrap();
        let sigma = params.sigma_step(100);
        assert_abs_diff_eq!(d.mean(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(d.log_variance(), sigma * sigma, max_relative = 0.01);
        assert!(d.root_mean() < 1.0);
        // Expected decay of E[sqrt(r)] for lognormal: exp(-sigma^2/8).
        assert_relative_eq!(
            d.root_mean(),
            (-sigma * sigma / 8.0).exp(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn gbm_point_mass_when_sigma_zero() {
        let d = gbm_distribution(&GbmParams::martingale(0.0), 10, 0.01, 201).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.ratios(), &[1.0]);
    }

    #[test]
    fn gbm_coarse_grid_truncates_to_point_mass() {
        // At a 10ms step the default grid spacing is about 14 sigma even at
        // 10% daily vol; the off-center mass is below the support cutoff.
        let d = gbm_distribution(&GbmParams::martingale(0.10), 10, 0.05, 201).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.ratios(), &[1.0]);
    }

    #[test]
    fn gbm_grid_alignment() {
        let params = GbmParams::martingale(0.60);
        let spacing = 4.5e-3;
        let d = gbm_distribution_on_log_grid(&params, 100, spacing, 100).unwrap();
        for r in d.ratios() {
            let s = (r.ln() / spacing).round();
            assert_abs_diff_eq!(r.ln(), s * spacing, epsilon = 1e-12);
        }
        assert!(d.len() >= 3, "expected nondegenerate support, got {}", d.len());
    }

    #[test]
    fn sample_path_deterministic_and_distributed() {
        let d = PriceChangeDistribution::new(10, 0.05, &[(0.96, 0.25), (1.0, 0.5), (1.04, 0.25)])
            .unwrap();
        let a = sample_path(&d, 1000, 7);
        let b = sample_path(&d, 1000, 7);
        assert_eq!(a, b);
        let c = sample_path(&d, 1000, 8);
        assert_ne!(a, c);

        let mut rng = path_rng(7, 3);
        let p = PathSampler::new(&d).sample_path(100_000, &mut rng);
        let n_up = p.ratios.iter().filter(|&&r| r == 1.04).count();
        let n_mid = p.ratios.iter().filter(|&&r| r == 1.0).count();
        assert!((n_up as f64 / 1e5 - 0.25).abs() < 0.01);
        assert!((n_mid as f64 / 1e5 - 0.5).abs() < 0.01);

        // Streams differ.
        let mut rng2 = path_rng(7, 4);
        let p2 = PathSampler::new(&d).sample_path(100_000, &mut rng2);
        assert_ne!(p, p2);
    }

    #[test]
    fn mean_reverting_autocorrelation() {
        let kappa = 0.15;
        let sigma = 1e-4;
        let mut rng = path_rng(42, 0);
        let path = mean_reverting_path(sigma, kappa, 10, 200_000, &mut rng).unwrap();
        let l: Vec<f64> = path.ratios.iter().map(|r| r.ln()).collect();
        let n = l.len();
        let mean = l.iter().sum::<f64>() / n as f64;
        let var = l.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        let mut cov = 0.0;
        for i in 1..n {
            cov += (l[i] - mean) * (l[i - 1] - mean);
        }
        cov /= (n - 1) as f64;
        assert_abs_diff_eq!(cov / var, -kappa, epsilon = 0.01);
        // Stationary variance sigma^2 / (1 - kappa^2).
        assert_relative_eq!(var, sigma * sigma / (1.0 - kappa * kappa), max_relative = 0.02);
    }

    #[test]
    fn mean_reverting_validation() {
        let mut rng = path_rng(1, 0);
        assert!(mean_reverting_path(1e-4, 1.0, 10, 10, &mut rng).is_err());
        assert!(mean_reverting_path(-1.0, 0.1, 10, 10, &mut rng).is_err());
        let p = mean_reverting_path(0.0, 0.0, 10, 5, &mut rng).unwrap();
        assert_eq!(p.ratios, vec![1.0; 5]);
    }
}
