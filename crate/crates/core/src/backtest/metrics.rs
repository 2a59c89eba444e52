use serde::Serialize;

use super::engine::Ledger;
use crate::error::{Result, SptError};

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Performance of a ledger against the market ledger.
///
/// Entries that divide by a zero standard deviation are `None` (`null` in
/// JSON) rather than infinite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Annualized return minus the market's, in percent per year.
    pub market_rr: f64,
    pub sharpe: Option<f64>,
    /// `log(V(T)/V(1))`.
    pub gamma_total: f64,
    /// `gamma_total / (stddev_daily · years)`.
    pub gamma_tilde: Option<f64>,
    /// Sample standard deviation of daily returns; `None` with one return.
    pub stddev_daily: Option<f64>,
}

/// Simple returns `V(t)/V(t−1) − 1`.
pub fn daily_returns(wealth: &[f64]) -> Vec<f64> {
    wealth.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
}

/// Sample mean and standard deviation (divisor `k − 1`); the deviation is
/// `None` for fewer than two values.
fn mean_sd(x: &[f64]) -> (f64, Option<f64>) {
    let k = x.len() as f64;
    let mean = x.iter().sum::<f64>() / k;
    if x.len() < 2 {
        return (mean, None);
    }
    let var = x.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, Some(var.sqrt()))
}

/// `(V(T)/V(1))^{252/N} − 1` over `N` daily returns.
pub fn annualized_return(wealth: &[f64]) -> f64 {
    let n = (wealth.len() - 1) as f64;
    (wealth[wealth.len() - 1] / wealth[0]).powf(TRADING_DAYS_PER_YEAR / n) - 1.0
}

/// Sharpe ratio, growth rates and deviation of a wealth series.
pub fn series_metrics(wealth: &[f64], market_wealth: &[f64], years: f64) -> Result<MetricsReport> {
    if wealth.len() < 2 || market_wealth.len() < 2 {
        return Err(SptError::Data("metrics need at least 2 wealth points".into()));
    }
    if !(years > 0.0 && years.is_finite()) {
        return Err(SptError::Config(format!("years must be positive, got {years}")));
    }
    let r = daily_returns(wealth);
    let (mean, sd) = mean_sd(&r);
    let usable = sd.filter(|&s| s > 0.0);
    let gamma_total = (wealth[wealth.len() - 1] / wealth[0]).ln();
    Ok(MetricsReport {
        market_rr: 100.0 * (annualized_return(wealth) - annualized_return(market_wealth)),
        sharpe: usable.map(|s| mean / s * (r.len() as f64 / years).sqrt()),
        gamma_total,
        gamma_tilde: usable.map(|s| gamma_total / (s * years)),
        stddev_daily: sd,
    })
}

pub fn metrics(ledger: &Ledger, market_ledger: &Ledger, years: f64) -> Result<MetricsReport> {
    series_metrics(&ledger.wealth(), &market_ledger.wealth(), years)
}
