//! Property bodies shared by the proptest suites and the acceptance runner.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use spt_core::analytics::*;
use spt_core::backtest::*;
use spt_core::market::market_weights;
use spt_core::portfolio::*;

use super::panel::{assert_conserves, Panel};

pub type Outcome = Result<(), TestCaseError>;

pub fn tau_annihilates_mu_and_is_psd(mu: &[f64], a: &DMatrix<f64>) -> Outcome {
    let tau = relative_covariance(a, mu).unwrap();
    let v = &tau * DVector::from_column_slice(mu);
    prop_assert!(v.amax() < 1e-13, "{v}");
    prop_assert!((&tau - tau.transpose()).amax() < 1e-15);
    let lo = tau.clone().symmetric_eigen().eigenvalues.min();
    prop_assert!(lo > -1e-12, "{lo}");
    Ok(())
}

pub fn dwp_drift_identity(mu: &[f64], a: &DMatrix<f64>) -> Outcome {
    let tau = relative_covariance(a, mu).unwrap();
    for p in [-2.0, -0.5, 0.5, 0.9] {
        let drift = fgp_drift(&PowerGenerator::diversity(p), mu, &tau).unwrap();
        let want = (1.0 - p) * excess_growth(&dwp_weights(mu, p).unwrap(), a).unwrap();
        prop_assert!((drift - want).abs() < 1e-10, "p={p}: {drift} vs {want}");
    }
    Ok(())
}

pub fn mixed_drift_is_linear(mu: &[f64], a: &DMatrix<f64>, p_plus: f64, p_minus: f64) -> Outcome {
    let tau = relative_covariance(a, mu).unwrap();
    let g = MixedGenerator::new(p_plus, p_minus);
    let mix = g.mixing(mu).unwrap();
    let whole = fgp_drift(&g, mu, &tau).unwrap();
    let plus = fgp_drift(&PowerGenerator::diversity(p_plus), mu, &tau).unwrap();
    let minus = fgp_drift(&PowerGenerator::diversity(p_minus), mu, &tau).unwrap();
    let want = mix.proportion * plus + mix.complement * minus;
    prop_assert!((whole - want).abs() < 1e-10, "{whole} vs {want}");
    Ok(())
}

/// Trade timing is cost-independent, so wealth can only fall as costs rise.
pub fn higher_costs_never_raise_wealth(p: &Panel, f: PortfolioSpec, tv: f64, c1: f64, dc: f64) -> Outcome {
    let d = p.dataset();
    let lo = simulate_ledger(&d, &BacktestConfig::new(f).with_tv_threshold(tv).with_cost_rate(c1)).unwrap();
    let hi = simulate_ledger(&d, &BacktestConfig::new(f).with_tv_threshold(tv).with_cost_rate(c1 + dc)).unwrap();
    prop_assert!(hi.final_wealth() <= lo.final_wealth() * (1.0 + 1e-12));
    let lo_trades: Vec<bool> = lo.records.iter().map(|r| r.traded).collect();
    let hi_trades: Vec<bool> = hi.records.iter().map(|r| r.traded).collect();
    prop_assert_eq!(lo_trades, hi_trades);
    Ok(())
}

pub fn implemented_weights_stay_on_listed_simplex(p: &Panel, f: PortfolioSpec, tv: f64) -> Outcome {
    let d = p.dataset();
    let l = simulate_ledger(&d, &BacktestConfig::new(f).with_tv_threshold(tv)).unwrap();
    for (t, r) in l.records.iter().enumerate() {
        prop_assert!(r.wealth > 0.0);
        super::assert_on_simplex(&r.implemented_weights);
        for (i, w) in r.implemented_weights.iter().enumerate() {
            if d.get(t, i).is_none_or(|o| o.delisted) {
                prop_assert_eq!(*w, 0.0);
            }
        }
    }
    prop_assert!(l.records.windows(2).all(|w| w[1].costs_paid >= w[0].costs_paid));
    assert_conserves(&l, &d);
    Ok(())
}

pub fn zero_threshold_zero_cost_matches_continuous_rebalancing(p: &Panel, f: PortfolioSpec) -> Outcome {
    let d = p.dataset();
    let n = d.n_assets();
    let f = f.clamped_to(n);
    let l = simulate_ledger(&d, &BacktestConfig::new(f).with_cost_rate(0.0)).unwrap();
    let mut w = WealthStepper::new(f, n).unwrap();
    for t in 1..p.caps.len() {
        let mu = market_weights(&p.caps[t - 1]).unwrap();
        w.step(&p.caps[t - 1], &p.caps[t], &mu).unwrap();
        let want = w.log_wealth().exp();
        prop_assert!((l.records[t].wealth - want).abs() < 1e-10, "day {}: {} vs {}", t, l.records[t].wealth, want);
    }
    Ok(())
}

pub fn market_buy_and_hold_never_trades(p: &Panel, tv: f64) -> Outcome {
    let cfg = BacktestConfig::new(PortfolioSpec::Market).with_tv_threshold(tv).with_cost_rate(0.0);
    let l = simulate_ledger(&p.dataset(), &cfg).unwrap();
    prop_assert!(l.records.iter().skip(1).all(|r| !r.traded && r.turnover == 0.0));
    Ok(())
}
