use serde::Serialize;

use super::horizon::{horizon_fkk_positive, horizon_prop2, horizon_prop4, horizon_thm1, HorizonBound, SmallStockCase};
use super::wealth::WealthStepper;
use crate::error::{Result, SptError};
use crate::market::{ConditionReport, ConditionTracker, MarketPath, MarketSpec, PathStepper};
use crate::par::{try_map_indices, Execution};
use crate::portfolio::PortfolioSpec;

/// Regularity constants entering the almost-sure bounds.
///
/// `eps` is the non-degeneracy constant, `phi` the no-failure floor, `kappa`
/// the floor of the weight at rank `m+2` used by positive-parameter
/// small-stock portfolios and `delta` the diversity constant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Constants {
    pub eps: Option<f64>,
    pub phi: Option<f64>,
    pub kappa: Option<f64>,
    pub delta: Option<f64>,
}

impl Constants {
    fn from_report(r: &ConditionReport) -> Self {
        Constants { eps: Some(r.eps_hat), phi: Some(r.phi_hat), kappa: Some(r.kappa_hat), delta: Some(r.delta_hat) }
    }

    /// Field-wise `self`, falling back to `other`.
    pub fn or(self, other: Constants) -> Constants {
        Constants {
            eps: self.eps.or(other.eps),
            phi: self.phi.or(other.phi),
            kappa: self.kappa.or(other.kappa),
            delta: self.delta.or(other.delta),
        }
    }

    fn pooled(reports: &[Constants]) -> Constants {
        let min = |f: fn(&Constants) -> Option<f64>| reports.iter().filter_map(f).reduce(f64::min);
        Constants { eps: min(|c| c.eps), phi: min(|c| c.phi), kappa: min(|c| c.kappa), delta: min(|c| c.delta) }
    }
}

/// Rank whose weight floor is `kappa` for `portfolio` on `n` assets.
fn lf_rank(portfolio: &PortfolioSpec, n: usize) -> usize {
    match *portfolio {
        PortfolioSpec::SmallRank { m, .. } => (m + 2).min(n),
        _ => 1,
    }
}

/// Almost-sure lower bound on `log(V^π(T)/V^μ(T))` given the constants, for
/// the families that admit one.
pub fn theoretical_bound(portfolio: &PortfolioSpec, n: usize, t: f64, c: &Constants) -> Option<f64> {
    let nf = n as f64;
    let eps = c.eps?;
    match *portfolio {
        PortfolioSpec::EqualWeight => diversity_neg_bound(nf, 0.0, t, eps, c.phi?),
        PortfolioSpec::Diversity { p } if p <= 0.0 => diversity_neg_bound(nf, p, t, eps, c.phi?),
        PortfolioSpec::Diversity { p } if p < 1.0 => {
            let delta = c.delta?;
            // both lower bounds on the generating-function change hold; the
            // floor one only when phi > 0
            let mut log_g = -((1.0 - p) / p) * nf.ln();
            if let Some(phi) = c.phi.filter(|&x| x > 0.0) {
                log_g = log_g.max((nf * phi).ln());
            }
            Some(log_g + (1.0 - p) * 0.5 * eps * delta * t)
        }
        PortfolioSpec::SmallRank { r, m } if m < n && r < 0.0 => {
            let phi = c.phi?;
            let k = (m + 1) as f64 * phi;
            let nm = (n - m) as f64;
            (phi > 0.0).then(|| k.ln() + 0.5 * eps * t * (1.0 - r) * (1.0 - k.powf(r) / nm))
        }
        PortfolioSpec::SmallRank { r, m } if m + 2 <= n && r > 0.0 && r < 1.0 => {
            let kappa = c.kappa?;
            let k = (m + 1) as f64 * kappa;
            let nm = (n - m) as f64;
            (kappa > 0.0)
                .then(|| k.ln() - (nm / 2.0).ln() / r + 0.5 * eps * (1.0 - r) * t * (1.0 - 1.0 / (2.0 * k.powf(r))))
        }
        PortfolioSpec::Mixed { p_plus, p_minus } => {
            let delta = c.delta?;
            let a = nf.powf(1.0 / p_plus - 1.0);
            let b = nf.powf(1.0 / p_minus - 1.0);
            Some(-(a + b).ln() + 0.5 * eps * (1.0 - p_plus) * delta * t / (1.0 + b))
        }
        _ => None,
    }
}

fn diversity_neg_bound(n: f64, p: f64, t: f64, eps: f64, phi: f64) -> Option<f64> {
    (phi > 0.0).then(|| (n * phi).ln() + (1.0 - p) * 0.5 * eps * t * (1.0 - (n * phi).powf(p) / n))
}

/// Horizon beyond which the family is guaranteed to outperform, if any.
pub fn arbitrage_threshold(portfolio: &PortfolioSpec, n: usize, c: &Constants) -> Option<HorizonBound> {
    let eps = c.eps?;
    match *portfolio {
        PortfolioSpec::Diversity { p } if p < 0.0 => Some(horizon_thm1(n, c.phi?, eps, p)),
        PortfolioSpec::Diversity { p } if p > 0.0 && p < 1.0 => Some(horizon_fkk_positive(n, eps, c.delta?, p)),
        PortfolioSpec::SmallRank { r, m } if r < 0.0 => {
            Some(horizon_prop2(SmallStockCase::SmallStockNeg, n, m, c.phi?, eps, r))
        }
        PortfolioSpec::SmallRank { r, m } if r > 0.0 => {
            Some(horizon_prop2(SmallStockCase::SmallStockPos, n, m, c.kappa?, eps, r))
        }
        PortfolioSpec::Mixed { p_plus, p_minus } => Some(horizon_prop4(n, c.delta?, eps, p_plus, p_minus)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathOutcome {
    pub path_index: u64,
    pub log_rel_wealth: f64,
    pub empirical: Constants,
    /// Bound evaluated with this path's own empirical constants.
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub portfolio: PortfolioSpec,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_paths: usize,
    pub fraction_outperforming: f64,
    pub min_log_rel_wealth: f64,
    pub mean_log_rel_wealth: f64,
    /// Bound at the constants pooled (worst case) over all paths.
    pub theoretical_bound: Option<f64>,
    /// Bound at the nominal constants, empirical ones filling the gaps.
    pub nominal_bound: Option<f64>,
    pub empirical: Constants,
    pub nominal: Constants,
    pub threshold: Option<HorizonBound>,
    /// Whether every path outperformed; set only when `T` exceeds a valid
    /// threshold, since nothing is asserted below it.
    pub claim: Option<bool>,
    pub per_path: Vec<PathOutcome>,
    pub notes: Vec<String>,
}

struct PathVerifier {
    portfolio: PortfolioSpec,
    n: usize,
    wealth: WealthStepper,
    tracker: ConditionTracker,
}

impl PathVerifier {
    fn new(portfolio: &PortfolioSpec, n: usize) -> Result<Self> {
        Ok(PathVerifier {
            portfolio: *portfolio,
            n,
            wealth: WealthStepper::new(*portfolio, n)?,
            tracker: ConditionTracker::new(lf_rank(portfolio, n)),
        })
    }

    fn step(&mut self, caps: &[f64], next_caps: &[f64], mu: &[f64]) -> Result<()> {
        self.tracker.observe_weights(mu, true);
        self.wealth.step(caps, next_caps, mu)
    }

    fn finish(mut self, mu_t: &[f64], t: f64, path_index: u64) -> PathOutcome {
        self.tracker.observe_weights(mu_t, false);
        let empirical = Constants::from_report(&self.tracker.report());
        PathOutcome {
            path_index,
            log_rel_wealth: self.wealth.log_relative(),
            bound: theoretical_bound(&self.portfolio, self.n, t, &empirical),
            empirical,
        }
    }
}

fn check_horizon(t: f64, horizon: f64) -> Result<()> {
    if !(t > 0.0 && t <= horizon + 1e-9) {
        return Err(SptError::Config(format!("T={t} must lie in (0, {horizon}]")));
    }
    Ok(())
}

fn verify_path(path: &MarketPath, portfolio: &PortfolioSpec, t: f64) -> Result<PathOutcome> {
    check_horizon(t, path.horizon())?;
    let k = path.index_at(t);
    let mut v = PathVerifier::new(portfolio, path.n_assets())?;
    match &path.cov {
        crate::market::CovSeries::Constant(a) => v.tracker.observe_cov(a)?,
        cov => {
            for s in 0..k {
                v.tracker.observe_cov(cov.at(s))?;
            }
        }
    }
    for s in 0..k {
        v.step(path.caps.row(s), path.caps.row(s + 1), path.weights.row(s))?;
    }
    Ok(v.finish(path.weights.row(k), t, path.path_index))
}

/// Outperformance of `portfolio` over the market at time `T` on stored paths.
pub fn verify_relative_arbitrage(
    paths: &[MarketPath],
    portfolio: &PortfolioSpec,
    t: f64,
    nominal: Constants,
) -> Result<VerificationReport> {
    let outcomes = paths.iter().map(|p| verify_path(p, portfolio, t)).collect::<Result<Vec<_>>>()?;
    let n = paths.first().map_or(0, |p| p.n_assets());
    Ok(summarize(portfolio, n, t, nominal, outcomes))
}

/// Streaming Monte Carlo verification: simulates `n_paths` paths of `spec`
/// up to `T` without storing them.
pub fn verify_simulated(
    spec: &MarketSpec,
    n_paths: usize,
    seed: u64,
    portfolio: &PortfolioSpec,
    t: f64,
    nominal: Constants,
    exec: Execution,
) -> Result<VerificationReport> {
    spec.validate()?;
    check_horizon(t, spec.horizon)?;
    let n = spec.n_assets;
    portfolio.validate(n)?;
    let outcomes = try_map_indices(exec, n_paths, |i| {
        let mut st = PathStepper::new(spec, seed, i as u64)?;
        let k = ((t + 1e-9) / st.step_size()).floor() as usize;
        let k = k.min(st.n_steps());
        let t_k = k as f64 * st.step_size();
        let mut v = PathVerifier::new(portfolio, n)?;
        let constant_cov = spec.has_constant_volatility();
        if constant_cov {
            v.tracker.observe_cov(st.cov())?;
        }
        while st.step_index() < k {
            st.advance()?;
            if !constant_cov {
                v.tracker.observe_cov(st.cov())?;
            }
            v.step(st.prev_caps(), st.caps(), st.prev_weights())?;
        }
        Ok(v.finish(st.weights(), t_k, i as u64))
    })?;
    Ok(summarize(portfolio, n, t, nominal, outcomes))
}

fn summarize(
    portfolio: &PortfolioSpec,
    n: usize,
    t: f64,
    nominal: Constants,
    per_path: Vec<PathOutcome>,
) -> VerificationReport {
    let n_paths = per_path.len();
    let lr: Vec<f64> = per_path.iter().map(|o| o.log_rel_wealth).collect();
    let wins = lr.iter().filter(|&&x| x > 0.0).count();
    let fraction_outperforming = if n_paths > 0 { wins as f64 / n_paths as f64 } else { f64::NAN };
    let min_log_rel_wealth = lr.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_log_rel_wealth = lr.iter().sum::<f64>() / n_paths as f64;
    let empirical = Constants::pooled(&per_path.iter().map(|o| o.empirical).collect::<Vec<_>>());
    let merged = nominal.or(empirical);
    let mut notes = Vec::new();

    let pooled_bound = theoretical_bound(portfolio, n, t, &empirical);
    let nominal_bound =
        if nominal == Constants::default() { None } else { theoretical_bound(portfolio, n, t, &merged) };
    if pooled_bound.is_none() {
        notes.push(format!("{} has no almost-sure lower bound relative to the market", portfolio.label()));
    }
    let threshold = arbitrage_threshold(portfolio, n, &merged);
    let claim = match &threshold {
        None => None,
        Some(h) if !h.valid => {
            notes.push(format!("threshold invalid for these parameters: {}", h.notes.join("; ")));
            None
        }
        Some(h) if h.threshold_t.is_nan() || t <= h.threshold_t => {
            notes.push(format!("T={t} is below the threshold {:.6}; no outperformance is asserted", h.threshold_t));
            None
        }
        Some(_) => Some(wins == n_paths && n_paths > 0),
    };
    if let (Some(e), Some(ne)) = (empirical.eps, nominal.eps) {
        if e < ne * (1.0 - 1e-9) {
            notes.push(format!("realized eps_hat={e} is below the nominal eps={ne}"));
        }
    }
    if let (Some(e), Some(ne)) = (empirical.phi, nominal.phi) {
        if e < ne * (1.0 - 1e-9) {
            notes.push(format!("realized phi_hat={e} is below the nominal phi={ne}"));
        }
    }
    VerificationReport {
        portfolio: *portfolio,
        horizon: t,
        n_paths,
        fraction_outperforming,
        min_log_rel_wealth,
        mean_log_rel_wealth,
        theoretical_bound: pooled_bound,
        nominal_bound,
        empirical,
        nominal,
        threshold,
        claim,
        per_path,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{simulate_paths, Regime};

    fn nf_spec(t: f64) -> MarketSpec {
        MarketSpec::isotropic(vec![0.0; 3], 0.2, vec![1.0, 1.2, 0.8], 1e-2, t)
            .unwrap()
            .with_regime(Regime::ReflectNf { phi: 0.1 })
            .unwrap()
    }

    #[test]
    fn market_never_outperforms() {
        let spec = nf_spec(1.0);
        let paths = simulate_paths(&spec, 4, 1).unwrap();
        let r = verify_relative_arbitrage(&paths, &PortfolioSpec::Market, 1.0, Constants::default()).unwrap();
        assert_eq!(r.fraction_outperforming, 0.0);
        assert_eq!(r.min_log_rel_wealth, 0.0);
        assert_eq!(r.claim, None);
        assert!(r.theoretical_bound.is_none() && !r.notes.is_empty());
    }

    #[test]
    fn streaming_matches_stored() {
        let spec = nf_spec(2.0);
        let port = PortfolioSpec::Diversity { p: -0.5 };
        let paths = simulate_paths(&spec, 3, 7).unwrap();
        let a = verify_relative_arbitrage(&paths, &port, 1.5, Constants::default()).unwrap();
        let b = verify_simulated(&spec, 3, 7, &port, 1.5, Constants::default(), Execution::Sequential).unwrap();
        assert_eq!(a.per_path, b.per_path);
        assert_eq!(a.theoretical_bound, b.theoretical_bound);
    }

    #[test]
    fn below_threshold_makes_no_claim() {
        let spec = nf_spec(1.0);
        let nominal = Constants { eps: Some(0.04), phi: Some(0.1), ..Default::default() };
        let r = verify_simulated(&spec, 2, 3, &PortfolioSpec::Diversity { p: -0.5 }, 1.0, nominal, Execution::Parallel)
            .unwrap();
        let h = r.threshold.as_ref().unwrap();
        assert!(h.valid && h.threshold_t > 1.0);
        assert_eq!(r.claim, None);
        assert!(r.nominal_bound.unwrap() < 0.0);
    }

    #[test]
    fn horizon_beyond_path_rejected() {
        let spec = nf_spec(1.0);
        let paths = simulate_paths(&spec, 1, 1).unwrap();
        assert!(verify_relative_arbitrage(&paths, &PortfolioSpec::Market, 2.0, Constants::default()).is_err());
        let e = verify_simulated(&spec, 1, 1, &PortfolioSpec::Market, 2.0, Constants::default(), Execution::Sequential);
        assert!(e.is_err());
    }

    #[test]
    fn bound_holds_pathwise_for_nf_diversity() {
        let spec = nf_spec(5.0);
        let r = verify_simulated(
            &spec,
            8,
            2,
            &PortfolioSpec::Diversity { p: -1.0 },
            5.0,
            Constants::default(),
            Execution::Parallel,
        )
        .unwrap();
        for o in &r.per_path {
            assert!(o.log_rel_wealth > o.bound.unwrap() - 0.01, "{o:?}");
        }
    }
}
