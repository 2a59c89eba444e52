use serde::Serialize;

use crate::error::Result;
use crate::market::MarketPath;
use crate::portfolio::PortfolioSpec;

/// Self-financing discrete compounding of a portfolio and of the market.
///
/// `V(t+h)/V(t) = Σ_i π_i(t) X_i(t+h)/X_i(t)` with `π` evaluated at the left
/// endpoint; both wealths start at 1.
#[derive(Clone, Debug)]
pub struct WealthStepper {
    portfolio: PortfolioSpec,
    pi: Vec<f64>,
    log_v: f64,
    log_v_market: f64,
}

impl WealthStepper {
    pub fn new(portfolio: PortfolioSpec, n: usize) -> Result<Self> {
        portfolio.validate(n)?;
        Ok(WealthStepper { portfolio, pi: vec![0.0; n], log_v: 0.0, log_v_market: 0.0 })
    }

    /// Advances over one step; `mu` are the market weights at its start.
    pub fn step(&mut self, caps: &[f64], next_caps: &[f64], mu: &[f64]) -> Result<()> {
        self.portfolio.weights_into(mu, &mut self.pi)?;
        let mut gross = 0.0;
        let mut gross_market = 0.0;
        for i in 0..caps.len() {
            let r = next_caps[i] / caps[i];
            gross += self.pi[i] * r;
            gross_market += mu[i] * r;
        }
        self.log_v += gross.ln();
        self.log_v_market += gross_market.ln();
        Ok(())
    }

    /// Weights used over the most recent step.
    pub fn weights(&self) -> &[f64] {
        &self.pi
    }

    pub fn log_wealth(&self) -> f64 {
        self.log_v
    }

    pub fn log_market_wealth(&self) -> f64 {
        self.log_v_market
    }

    /// `log(V^π / V^μ)`; exactly 0 for the market portfolio.
    pub fn log_relative(&self) -> f64 {
        self.log_v - self.log_v_market
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WealthSeries {
    pub times: Vec<f64>,
    pub wealth: Vec<f64>,
    pub market_wealth: Vec<f64>,
    /// `log(V^π(t)/V^μ(t))`.
    pub log_relative: Vec<f64>,
}

/// Portfolio and market wealth along `path`.
pub fn wealth_series(path: &MarketPath, portfolio: &PortfolioSpec) -> Result<WealthSeries> {
    let n = path.n_assets();
    let mut w = WealthStepper::new(*portfolio, n)?;
    let len = path.times.len();
    let mut out = WealthSeries {
        times: path.times.clone(),
        wealth: Vec::with_capacity(len),
        market_wealth: Vec::with_capacity(len),
        log_relative: Vec::with_capacity(len),
    };
    let mut record = |w: &WealthStepper| {
        out.wealth.push(w.log_wealth().exp());
        out.market_wealth.push(w.log_market_wealth().exp());
        out.log_relative.push(w.log_relative());
    };
    record(&w);
    for t in 0..path.n_steps() {
        w.step(path.caps.row(t), path.caps.row(t + 1), path.weights.row(t))?;
        record(&w);
    }
    Ok(out)
}

/// `log(V^π/V^μ)` at every grid time of `path`.
pub fn wealth_relative(path: &MarketPath, portfolio: &PortfolioSpec) -> Result<Vec<f64>> {
    Ok(wealth_series(path, portfolio)?.log_relative)
}
