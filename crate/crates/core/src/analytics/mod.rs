//! Pathwise analytics: relative covariances, drift processes, wealth,
//! master-equation decompositions, collision local times, outperformance
//! horizons and Monte Carlo verification.

mod covariance;
mod horizon;
mod local_time;
mod master;
mod verify;
mod wealth;

pub use covariance::{excess_growth, fgp_drift, fgp_drift_with, relative_covariance, relative_covariance_into};
pub use horizon::{
    horizon_fkk_positive, horizon_prop2, horizon_prop3, horizon_prop4, horizon_thm1, lf_from_diversity, HorizonBound,
    HorizonInputs, Interval, SmallStockCase,
};
pub use local_time::{
    count_higher_order_collisions, default_bandwidth, is_higher_order_collision, local_time, local_time_from_gap,
    pair_increment, ranked_gap, LocalTimeAccumulator, LocalTimeSeries,
};
pub use master::{
    decomposition_trace, master_decomposition, DecompositionReport, DecompositionTrace, MasterAccumulator,
};
pub use verify::{
    arbitrage_threshold, theoretical_bound, verify_relative_arbitrage, verify_simulated, Constants, PathOutcome,
    VerificationReport,
};
pub use wealth::{wealth_relative, wealth_series, WealthSeries, WealthStepper};
