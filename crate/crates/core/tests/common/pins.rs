use spt_core::backtest::*;
use spt_core::portfolio::PortfolioSpec;

pub struct Pin {
    pub portfolio: PortfolioSpec,
    pub tv: f64,
    pub final_wealth: f64,
    pub trades: usize,
    pub market_rr: f64,
    pub sharpe: f64,
    pub gamma_total: f64,
    pub gamma_tilde: f64,
    pub stddev_daily: f64,
}

pub const PINS: [Pin; 4] = [
    Pin {
        portfolio: PortfolioSpec::Market,
        tv: 0.0,
        final_wealth: 0.857603877588336,
        trades: 9,
        market_rr: 0.0,
        sharpe: -0.9055958002354509,
        gamma_total: -0.15361296723419832,
        gamma_tilde: -15.027606282539574,
        stddev_daily: 0.00516223849645925,
    },
    Pin {
        portfolio: PortfolioSpec::Diversity { p: -0.5 },
        tv: 0.0015,
        final_wealth: 1.10916989751001,
        trades: 471,
        market_rr: 12.836651233874141,
        sharpe: 0.4642527443314524,
        gamma_total: 0.10361189547128583,
        gamma_tilde: 6.329679618902231,
        stddev_daily: 0.008266618305938772,
    },
    Pin {
        portfolio: PortfolioSpec::Diversity { p: 0.5 },
        tv: 0.0,
        final_wealth: 0.909123431611850,
        trades: 499,
        market_rr: 2.7668017878501483,
        sharpe: -0.5390792190806661,
        gamma_total: -0.09527440567119173,
        gamma_tilde: -9.215368837926519,
        stddev_daily: 0.005221118152026257,
    },
    Pin {
        portfolio: PortfolioSpec::SmallRank { r: -0.5, m: 5 },
        tv: 0.001,
        final_wealth: 1.282991751120282,
        trades: 497,
        market_rr: 20.87555928030436,
        sharpe: 0.7649770391112631,
        gamma_total: 0.24919465624438347,
        gamma_tilde: 10.657340256735672,
        stddev_daily: 0.011808368252512129,
    },
];

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

/// Every pinned synthetic-panel backtest, compared at 1e-9 relative.
pub fn check_pins() -> Result<(), String> {
    let d = synthetic_dataset().map_err(|e| e.to_string())?;
    for pin in &PINS {
        let o = run_backtest(&d, &BacktestConfig::new(pin.portfolio).with_tv_threshold(pin.tv))
            .map_err(|e| e.to_string())?;
        let m = &o.metrics;
        let label = pin.portfolio.label();
        let got = [
            o.ledger.final_wealth(),
            m.market_rr,
            m.sharpe.unwrap_or(f64::NAN),
            m.gamma_total,
            m.gamma_tilde.unwrap_or(f64::NAN),
            m.stddev_daily.unwrap_or(f64::NAN),
        ];
        let want = [pin.final_wealth, pin.market_rr, pin.sharpe, pin.gamma_total, pin.gamma_tilde, pin.stddev_daily];
        if !got.iter().zip(&want).all(|(a, b)| close(*a, *b)) {
            return Err(format!("{label}: got {got:?}, pinned {want:?}"));
        }
        if o.ledger.n_trades() != pin.trades {
            return Err(format!("{label}: {} trades, pinned {}", o.ledger.n_trades(), pin.trades));
        }
    }
    Ok(())
}
