//! Simulation, verification and backtesting engine for diversity-weighted
//! and other functionally-generated portfolios.
//!
//! - [`market`]: log-Euler simulation of Itô capitalization models, market
//!   weights, ranks, regularity diagnostics and barrier regimes.
//! - [`portfolio`]: weight rules and their generating functions.
//! - [`analytics`]: relative covariances, excess growth, drift processes,
//!   pathwise master-equation decompositions, collision local times,
//!   outperformance horizons and Monte Carlo verification.
//! - [`backtest`]: threshold-rebalanced backtests with proportional costs,
//!   dividends and delistings, plus performance metrics.

pub mod analytics;
pub mod backtest;
mod error;
pub mod market;
pub mod par;
pub mod portfolio;

pub use error::{Result, SptError};
pub use par::Execution;
