//! Benchmarks for the paths that dominate real runs: the per-state arb
//! profit kernel, a backward-induction solve, a minute of sequencing
//! simulation, and the capture-game sweep.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use latency_arb_core::capture;
use latency_arb_core::cpmm::{self, FeeRate, PoolState, PriceRatio};
use latency_arb_core::dp::{self, DpConfig};
use latency_arb_core::price_models::{gbm_distribution, GbmParams};
use latency_arb_core::regime::{self, PathSource, RegimeConfig};

fn bench_cpmm(c: &mut Criterion) {
    let fee = FeeRate::new(0.0005).unwrap();
    let pool = PoolState::new(500_000.0, 50_000_000.0).unwrap();
    let ps: Vec<PriceRatio> = (0..1000)
        .map(|i| PriceRatio::new(0.99 + 0.02 * i as f64 / 999.0).unwrap())
        .collect();

    c.bench_function("cpmm/arb_profit_1k", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for &p in &ps {
                acc += cpmm::arb_profit(black_box(p), fee);
            }
            acc
        })
    });
    c.bench_function("cpmm/maximal_trade", |b| {
        b.iter(|| cpmm::maximal_trade(black_box(&pool), black_box(100.7), fee).unwrap())
    });
}

fn bench_solve(c: &mut Criterion) {
    let fee = FeeRate::new(0.0005).unwrap();
    let narrow = DpConfig {
        delta_ms: 100,
        t_w_ms: 200,
        horizon_ms: 10_000,
        fee,
        n_price_points: 201,
        pmax_total: 0.05,
        keep_values: false,
    };
    let d_narrow =
        gbm_distribution(&GbmParams::martingale(0.60), 100, narrow.pmax_total, narrow.n_price_points)
            .unwrap();
    c.bench_function("dp/solve_201pt_100ms_10s", |b| {
        b.iter(|| dp::solve(black_box(&narrow), &d_narrow).unwrap())
    });

    let wide = DpConfig {
        delta_ms: 10,
        t_w_ms: 200,
        horizon_ms: 1_000,
        fee,
        n_price_points: 2001,
        pmax_total: 0.01,
        keep_values: false,
    };
    let d_wide =
        gbm_distribution(&GbmParams::martingale(0.042), 10, wide.pmax_total, wide.n_price_points)
            .unwrap();
    c.bench_function("dp/solve_2001pt_10ms_1s", |b| {
        b.iter(|| dp::solve(black_box(&wide), &d_wide).unwrap())
    });
}

fn bench_regime(c: &mut Criterion) {
    let cfg = RegimeConfig::default();
    let dist = gbm_distribution(&GbmParams::martingale(0.042), cfg.step_ms, 0.01, 2001).unwrap();
    let source = PathSource::Sampled { dist: &dist, seed: 42 };

    c.bench_function("regime/timeboost_10min", |b| {
        b.iter(|| regime::simulate_timeboost(&cfg, black_box(source), 10).unwrap())
    });
    c.bench_function("regime/fcfs_10min", |b| {
        b.iter(|| regime::simulate_fcfs(&cfg, black_box(source), 10).unwrap())
    });
}

fn bench_capture(c: &mut Criterion) {
    let pool = PoolState::new(500_000.0, 50_000_000.0).unwrap();
    let alphas: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();

    c.bench_function("capture/best_response", |b| {
        b.iter(|| capture::best_response(black_box(1.21), black_box(0.6)).unwrap())
    });
    c.bench_function("capture/alpha_sweep_101", |b| {
        b.iter(|| capture::alpha_sweep(black_box(1.21), &alphas, &pool).unwrap())
    });
}

criterion_group!(benches, bench_cpmm, bench_solve, bench_regime, bench_capture);
criterion_main!(benches);
