//! Threshold-rebalanced backtests on daily panel data.
//!
//! Holdings compound by total-return factors, so distributions are
//! reinvested in the paying asset. Delisting proceeds wait in cash until the
//! next trade; new listings are eligible from their first date.

mod data;
mod engine;
mod metrics;
mod synthetic;

pub use data::{read_market_data, MarketDataSet, Observation, DATA_HEADER};
pub use engine::{
    run_backtest, simulate_ledger, tv_distance, BacktestConfig, BacktestOutcome, DayRecord, Ledger, LEDGER_HEADER,
    TV_TOL,
};
pub use metrics::{annualized_return, daily_returns, metrics, series_metrics, MetricsReport, TRADING_DAYS_PER_YEAR};
pub use synthetic::{
    business_days, synthetic_dataset, SYNTHETIC_ASSETS, SYNTHETIC_DAYS, SYNTHETIC_DELIST_DAY, SYNTHETIC_LISTING_DAY,
    SYNTHETIC_SEED,
};

/// Loads a panel in the `date,asset_id,cap,total_return_factor,delisted` schema.
pub fn load_market_data(path: impl AsRef<std::path::Path>) -> crate::Result<MarketDataSet> {
    MarketDataSet::from_path(path)
}
