//! Analysis toolkit for time-advantaged arbitrage against constant-product
//! AMM pools: exact arbitrage math, a backward-induction solver for the
//! wait-vs-arbitrage timing decision, profit simulators for different
//! transaction-sequencing regimes, and the adaptive-pool capture game.
//!
//! Price ratios throughout are external price divided by pool price; a pool
//! quoting the external price exactly has ratio 1.

pub mod capture;
pub mod cpmm;
pub mod dist;
pub mod dp;
pub mod error;
pub mod market_data;
pub mod price_models;
pub mod regime;

pub use capture::CaptureOutcome;
pub use cpmm::{ArbTrade, FeeRate, PoolState, PriceRatio};
pub use dist::PriceChangeDistribution;
pub use dp::{Action, DpConfig, PolicyTables, SolveDiagnostics};
pub use error::{Error, Result};
pub use market_data::{MidPriceSeries, PairStats, TickIngest, TickRecord};
pub use price_models::{GbmParams, PricePath};
pub use regime::{MinuteResult, Regime, RegimeConfig, RegimeReport};
