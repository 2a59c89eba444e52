use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::data::MarketDataSet;
use super::metrics::{metrics, MetricsReport};
use crate::error::{check_dim, Result, SptError};
use crate::market::market_weights_into;
use crate::portfolio::PortfolioSpec;

/// TV values at or below this margin above the threshold do not trigger a
/// trade, so that rounding noise never causes spurious rebalances.
pub const TV_TOL: f64 = 1e-12;

pub const LEDGER_HEADER: &str = "date,wealth,turnover,costs_paid";

fn default_cost_rate() -> f64 {
    0.005
}

fn default_initial_wealth() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestConfig {
    #[serde(default)]
    pub tv_threshold: f64,
    #[serde(default = "default_cost_rate")]
    pub cost_rate: f64,
    #[serde(default = "default_initial_wealth")]
    pub initial_wealth: f64,
    pub portfolio: PortfolioSpec,
    /// Length of the backtest in years; defaults to returns / 252.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub years: Option<f64>,
}

impl BacktestConfig {
    pub fn new(portfolio: PortfolioSpec) -> Self {
        BacktestConfig {
            tv_threshold: 0.0,
            cost_rate: default_cost_rate(),
            initial_wealth: default_initial_wealth(),
            portfolio,
            years: None,
        }
    }

    pub fn with_tv_threshold(mut self, tv: f64) -> Self {
        self.tv_threshold = tv;
        self
    }

    pub fn with_cost_rate(mut self, c: f64) -> Self {
        self.cost_rate = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tv_threshold >= 0.0 && self.tv_threshold.is_finite()) {
            return Err(SptError::Config(format!("tv_threshold must be >= 0, got {}", self.tv_threshold)));
        }
        if !(0.0..1.0).contains(&self.cost_rate) {
            return Err(SptError::Config(format!("cost_rate must be in [0, 1), got {}", self.cost_rate)));
        }
        if !(self.initial_wealth > 0.0 && self.initial_wealth.is_finite()) {
            return Err(SptError::Config(format!("initial_wealth must be positive, got {}", self.initial_wealth)));
        }
        if let Some(y) = self.years {
            if !(y > 0.0 && y.is_finite()) {
                return Err(SptError::Config(format!("years must be positive, got {y}")));
            }
        }
        self.portfolio.validate_params()
    }
}

/// `TV(π̃, π) = Σ_i π̃_i |π̃_i − π_i|`; not symmetric in its arguments.
pub fn tv_distance(drifted: &[f64], target: &[f64]) -> Result<f64> {
    check_dim(drifted.len(), target.len())?;
    Ok(drifted.iter().zip(target).map(|(d, t)| d * (d - t).abs()).sum())
}

/// End-of-day state; weights are indexed like `Ledger::assets`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DayRecord {
    pub date: NaiveDate,
    /// Post-cost wealth at the close.
    pub wealth: f64,
    /// `V(t)/V(t−1)` before costs.
    pub gross_return: f64,
    /// Currency traded today; 0 when holding.
    pub turnover: f64,
    /// Cost charged today.
    pub cost: f64,
    /// Cumulative costs.
    pub costs_paid: f64,
    pub traded: bool,
    /// Delisting proceeds awaiting redeployment, before trading.
    pub cash_pending: f64,
    /// `π̃(t)`: holdings after today's returns over pre-trade wealth.
    pub drifted_weights: Vec<f64>,
    /// `π̄(t)`: holdings carried into the next day over wealth.
    pub implemented_weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ledger {
    pub portfolio: PortfolioSpec,
    pub assets: Vec<String>,
    pub records: Vec<DayRecord>,
    /// Set when every asset delisted before the last date.
    pub partial: bool,
}

impl Ledger {
    pub fn wealth(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.wealth).collect()
    }

    pub fn final_wealth(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.wealth)
    }

    /// Rebalances after the formation day.
    pub fn n_trades(&self) -> usize {
        self.records.iter().skip(1).filter(|r| r.traded).count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{LEDGER_HEADER}")?;
        for r in &self.records {
            writeln!(out, "{},{},{},{}", r.date.format("%Y-%m-%d"), r.wealth, r.turnover, r.costs_paid)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BacktestOutcome {
    pub ledger: Ledger,
    /// Same configuration with the market portfolio.
    pub market_ledger: Ledger,
    pub metrics: MetricsReport,
}

struct Engine<'a> {
    data: &'a MarketDataSet,
    config: &'a BacktestConfig,
    listed: Vec<usize>,
    caps: Vec<f64>,
    mu: Vec<f64>,
    local_target: Vec<f64>,
    target: Vec<f64>,
}

impl<'a> Engine<'a> {
    /// Target weights over assets listed and not delisting on day `t`;
    /// `None` when no asset is eligible.
    fn target(&mut self, t: usize) -> Result<Option<&[f64]>> {
        let row = self.data.row(t);
        self.listed.clear();
        self.caps.clear();
        for (i, o) in row.iter().enumerate() {
            if let Some(o) = o.filter(|o| !o.delisted) {
                self.listed.push(i);
                self.caps.push(o.cap);
            }
        }
        self.target.iter_mut().for_each(|x| *x = 0.0);
        match self.listed.len() {
            0 => return Ok(None),
            1 => self.target[self.listed[0]] = 1.0,
            k => {
                self.mu.resize(k, 0.0);
                self.local_target.resize(k, 0.0);
                market_weights_into(&self.caps, &mut self.mu)?;
                self.config.portfolio.clamped_to(k).weights_into(&self.mu, &mut self.local_target)?;
                for (j, &i) in self.listed.iter().enumerate() {
                    self.target[i] = self.local_target[j];
                }
            }
        }
        Ok(Some(&self.target))
    }
}

/// Runs the day loop only; see [`run_backtest`] for metrics.
///
/// Day 0 forms the target portfolio at no cost. On each later day, holdings
/// grow by the day's total-return factors, delisting positions turn into
/// cash, and the portfolio trades to target when the drifted weights are
/// more than `tv_threshold` away in TV or cash is pending. Costs are
/// `cost_rate` times the currency traded, with targets sized on pre-cost
/// wealth.
pub fn simulate_ledger(data: &MarketDataSet, config: &BacktestConfig) -> Result<Ledger> {
    config.validate()?;
    if data.n_dates() < 2 {
        return Err(SptError::Data(format!("backtest needs at least 2 dates, got {}", data.n_dates())));
    }
    let n = data.n_assets();
    let mut eng = Engine {
        data,
        config,
        listed: Vec::with_capacity(n),
        caps: Vec::with_capacity(n),
        mu: Vec::with_capacity(n),
        local_target: Vec::with_capacity(n),
        target: vec![0.0; n],
    };
    let mut ledger =
        Ledger { portfolio: config.portfolio, assets: data.assets.clone(), records: Vec::new(), partial: false };
    let v0 = config.initial_wealth;
    let Some(target) = eng.target(0)? else {
        return Err(SptError::Data("no asset is listed on the first date".into()));
    };
    let mut holdings: Vec<f64> = target.iter().map(|w| v0 * w).collect();
    ledger.records.push(DayRecord {
        date: data.dates[0],
        wealth: v0,
        gross_return: 1.0,
        turnover: 0.0,
        cost: 0.0,
        costs_paid: 0.0,
        traded: true,
        cash_pending: 0.0,
        drifted_weights: target.to_vec(),
        implemented_weights: target.to_vec(),
    });
    let mut prev_wealth = v0;
    let mut costs_paid = 0.0;
    let mut drifted = vec![0.0; n];
    for t in 1..data.n_dates() {
        let mut cash = 0.0;
        for (i, h) in holdings.iter_mut().enumerate() {
            if *h == 0.0 {
                continue;
            }
            let o = data.get(t, i).expect("held assets stay listed until their delisting day");
            *h *= o.total_return_factor;
            if o.delisted {
                cash += *h;
                *h = 0.0;
            }
        }
        let pre_cost: f64 = holdings.iter().sum::<f64>() + cash;
        for (d, h) in drifted.iter_mut().zip(&holdings) {
            *d = h / pre_cost;
        }
        let gross_return = pre_cost / prev_wealth;
        let Some(target) = eng.target(t)? else {
            ledger.records.push(DayRecord {
                date: data.dates[t],
                wealth: pre_cost,
                gross_return,
                turnover: 0.0,
                cost: 0.0,
                costs_paid,
                traded: false,
                cash_pending: cash,
                drifted_weights: drifted.clone(),
                implemented_weights: vec![0.0; n],
            });
            ledger.partial = t + 1 < data.n_dates();
            break;
        };
        let trade = cash > 0.0 || tv_distance(&drifted, target)? > config.tv_threshold + TV_TOL;
        let (turnover, cost, wealth) = if trade {
            let turnover: f64 = target.iter().zip(&holdings).map(|(w, h)| (pre_cost * w - h).abs()).sum();
            let cost = config.cost_rate * turnover;
            let wealth = pre_cost - cost;
            for (h, w) in holdings.iter_mut().zip(target) {
                *h = wealth * w;
            }
            (turnover, cost, wealth)
        } else {
            (0.0, 0.0, pre_cost)
        };
        costs_paid += cost;
        let implemented_weights = if trade { target.to_vec() } else { drifted.clone() };
        ledger.records.push(DayRecord {
            date: data.dates[t],
            wealth,
            gross_return,
            turnover,
            cost,
            costs_paid,
            traded: trade,
            cash_pending: cash,
            drifted_weights: drifted.clone(),
            implemented_weights,
        });
        prev_wealth = wealth;
    }
    Ok(ledger)
}

/// Backtest of `config.portfolio` and of the market under the same costs and
/// threshold, with metrics of the former against the latter.
pub fn run_backtest(data: &MarketDataSet, config: &BacktestConfig) -> Result<BacktestOutcome> {
    let ledger = simulate_ledger(data, config)?;
    let market_ledger = simulate_ledger(data, &BacktestConfig { portfolio: PortfolioSpec::Market, ..*config })?;
    let years = config.years.unwrap_or((ledger.records.len() - 1) as f64 / 252.0);
    let metrics = metrics(&ledger, &market_ledger, years)?;
    Ok(BacktestOutcome { ledger, market_ledger, metrics })
}
