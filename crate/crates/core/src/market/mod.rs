//! Itô market simulation and pathwise market diagnostics.

mod conditions;
pub mod io;
mod path;
mod rank;
mod regime;
mod sim;
mod spec;

pub use conditions::{check_conditions, check_symmetric, eigen_range, ConditionReport, ConditionTracker};
pub use path::{market_weights, market_weights_into, CovSeries, MarketPath, Series};
pub use rank::{rank_order, ranked, RankView};
pub use regime::{enforce_regime, enforce_regime_with};
pub use sim::{path_rng, simulate_path, simulate_paths, simulate_paths_with, PathStepper};
pub use spec::{Drift, DriftFn, MarketSpec, Regime, Volatility, VolatilityFn};

/// Rank view of every grid point of a path.
pub fn rank_view(weights: &Series) -> RankView {
    RankView::from_rows(weights.rows())
}
