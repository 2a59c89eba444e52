use nalgebra::DMatrix;
use serde::Serialize;

use super::covariance::{fgp_drift_with, relative_covariance_into};
use super::local_time::{
    default_bandwidth, is_higher_order_collision, pair_increment, ranked_gap, LocalTimeAccumulator,
};
use super::wealth::WealthStepper;
use crate::error::{Result, SptError};
use crate::market::{rank_order, MarketPath};
use crate::portfolio::{GeneratingFunction, PortfolioSpec, RankCut};

/// Pathwise terms of `log(V^π/V^μ) = log(G(μ(T))/G(μ(0))) + ∫𝔤 dt + leakage`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub log_rel_wealth: f64,
    pub log_g_change: f64,
    /// Left-endpoint Riemann sum of the drift process.
    pub drift_integral: f64,
    /// Local-time term of rank-based portfolios; 0 otherwise.
    pub leakage: f64,
    pub residual: f64,
    pub step: f64,
    /// Local-time bandwidth; present for rank-based portfolios only.
    pub bandwidth: Option<f64>,
    /// Left endpoints with three or more ranks within `bandwidth`.
    pub higher_order_collisions: usize,
}

/// Cumulative decomposition terms at every grid time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionTrace {
    pub times: Vec<f64>,
    pub log_rel_wealth: Vec<f64>,
    pub log_g_change: Vec<f64>,
    pub drift_integral: Vec<f64>,
    pub leakage: Vec<f64>,
}

struct Leakage {
    /// Boundary rank `m` of the gap `Ξ_m` between ranks `m` and `m+1`.
    m: usize,
    /// `-1` for the large-stock cut, `+1` for the small-stock cut.
    sign: f64,
    /// 0-based rank whose weight multiplies `d𝔏`.
    weight_rank: usize,
    lt: LocalTimeAccumulator,
}

/// Streaming master-equation decomposition; feed it consecutive grid points.
pub struct MasterAccumulator {
    g: Box<dyn GeneratingFunction>,
    wealth: WealthStepper,
    leak: Option<Leakage>,
    bandwidth: f64,
    tau: DMatrix<f64>,
    hess: DMatrix<f64>,
    perm: Vec<usize>,
    next_perm: Vec<usize>,
    log_g0: Option<f64>,
    log_g: f64,
    drift: f64,
    leakage: f64,
    step: f64,
    collisions: usize,
}

impl MasterAccumulator {
    /// `bandwidth` defaults to `2√step`.
    pub fn new(portfolio: &PortfolioSpec, n: usize, step: f64, bandwidth: Option<f64>) -> Result<Self> {
        let g = portfolio.generating_function()?;
        let wealth = WealthStepper::new(*portfolio, n)?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(SptError::Config(format!("step must be positive, got {step}")));
        }
        let bandwidth = bandwidth.unwrap_or_else(|| default_bandwidth(step));
        let leak = match g.rank_cut() {
            Some(RankCut::Top(m)) if m < n => {
                Some(Leakage { m, sign: -1.0, weight_rank: m - 1, lt: LocalTimeAccumulator::new(bandwidth)? })
            }
            Some(RankCut::Bottom(m)) => {
                Some(Leakage { m, sign: 1.0, weight_rank: m, lt: LocalTimeAccumulator::new(bandwidth)? })
            }
            _ => None,
        };
        Ok(MasterAccumulator {
            g,
            wealth,
            leak,
            bandwidth,
            tau: DMatrix::zeros(n, n),
            hess: DMatrix::zeros(n, n),
            perm: Vec::with_capacity(n),
            next_perm: Vec::with_capacity(n),
            log_g0: None,
            log_g: 0.0,
            drift: 0.0,
            leakage: 0.0,
            step,
            collisions: 0,
        })
    }

    fn start(&mut self, mu: &[f64]) -> Result<()> {
        let lg = self.g.log_value(mu)?;
        self.log_g0 = Some(lg);
        self.log_g = lg;
        rank_order(mu, &mut self.perm);
        Ok(())
    }

    /// Advances over `[t, t+h]`: `mu`, `caps`, `cov` at `t`; `next_*` at `t+h`.
    pub fn step(
        &mut self,
        caps: &[f64],
        next_caps: &[f64],
        mu: &[f64],
        next_mu: &[f64],
        cov: &DMatrix<f64>,
        h: f64,
    ) -> Result<()> {
        if self.log_g0.is_none() {
            self.start(mu)?;
        }
        self.wealth.step(caps, next_caps, mu)?;
        relative_covariance_into(cov, mu, &mut self.tau)?;
        self.drift += fgp_drift_with(self.g.as_ref(), mu, &self.tau, &mut self.hess)? * h;
        if let Some(l) = &mut self.leak {
            if is_higher_order_collision(mu, &self.perm, self.bandwidth) {
                self.collisions += 1;
            }
            let boundary_weight = self.wealth.weights()[self.perm[l.weight_rank]];
            let gap = ranked_gap(mu, &self.perm, l.m);
            let d_lt = l.lt.accumulate(gap, pair_increment(mu, next_mu, &self.perm, l.m));
            rank_order(next_mu, &mut self.next_perm);
            self.leakage += l.sign * 0.5 * boundary_weight * d_lt;
            std::mem::swap(&mut self.perm, &mut self.next_perm);
        }
        self.log_g = self.g.log_value(next_mu)?;
        Ok(())
    }

    pub fn log_rel_wealth(&self) -> f64 {
        self.wealth.log_relative()
    }

    pub fn log_g_change(&self) -> f64 {
        self.log_g0.map_or(0.0, |g0| self.log_g - g0)
    }

    pub fn drift_integral(&self) -> f64 {
        self.drift
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn report(&self) -> DecompositionReport {
        let log_rel_wealth = self.log_rel_wealth();
        let log_g_change = self.log_g_change();
        DecompositionReport {
            log_rel_wealth,
            log_g_change,
            drift_integral: self.drift,
            leakage: self.leakage,
            residual: log_rel_wealth - log_g_change - self.drift - self.leakage,
            step: self.step,
            bandwidth: self.leak.as_ref().map(|_| self.bandwidth),
            higher_order_collisions: self.collisions,
        }
    }
}

fn path_step(path: &MarketPath) -> f64 {
    if path.n_steps() == 0 {
        1.0
    } else {
        path.horizon() / path.n_steps() as f64
    }
}

fn run<F: FnMut(&MasterAccumulator)>(
    path: &MarketPath,
    portfolio: &PortfolioSpec,
    bandwidth: Option<f64>,
    mut visit: F,
) -> Result<MasterAccumulator> {
    let n = path.n_assets();
    let mut acc = MasterAccumulator::new(portfolio, n, path_step(path), bandwidth)?;
    acc.start(path.weights.row(0))?;
    visit(&acc);
    for t in 0..path.n_steps() {
        acc.step(
            path.caps.row(t),
            path.caps.row(t + 1),
            path.weights.row(t),
            path.weights.row(t + 1),
            path.cov.at(t),
            path.times[t + 1] - path.times[t],
        )?;
        visit(&acc);
    }
    Ok(acc)
}

/// Master-equation decomposition of `portfolio` along `path`.
///
/// Fails with [`SptError::Unsupported`] for weight rules without a
/// generating function.
pub fn master_decomposition(
    path: &MarketPath,
    portfolio: &PortfolioSpec,
    bandwidth: Option<f64>,
) -> Result<DecompositionReport> {
    Ok(run(path, portfolio, bandwidth, |_| {})?.report())
}

/// Running decomposition terms along `path`.
pub fn decomposition_trace(
    path: &MarketPath,
    portfolio: &PortfolioSpec,
    bandwidth: Option<f64>,
) -> Result<DecompositionTrace> {
    let len = path.times.len();
    let mut tr = DecompositionTrace {
        times: path.times.clone(),
        log_rel_wealth: Vec::with_capacity(len),
        log_g_change: Vec::with_capacity(len),
        drift_integral: Vec::with_capacity(len),
        leakage: Vec::with_capacity(len),
    };
    run(path, portfolio, bandwidth, |a| {
        tr.log_rel_wealth.push(a.log_rel_wealth());
        tr.log_g_change.push(a.log_g_change());
        tr.drift_integral.push(a.drift_integral());
        tr.leakage.push(a.leakage());
    })?;
    Ok(tr)
}
