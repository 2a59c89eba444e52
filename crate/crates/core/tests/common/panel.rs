use chrono::NaiveDate;
use proptest::prelude::*;
use spt_core::backtest::*;
use spt_core::portfolio::PortfolioSpec;

/// Random panel: per-day log-moves, dividend factors and an optional delisting.
#[derive(Clone, Debug)]
pub struct Panel {
    pub caps: Vec<Vec<f64>>,
    pub trf: Vec<Vec<f64>>,
    pub delist: Option<(usize, usize)>,
}

impl Panel {
    pub fn dataset(&self) -> MarketDataSet {
        let start = NaiveDate::from_ymd_opt(2010, 1, 4).unwrap();
        let dates = business_days(start, self.caps.len());
        let n = self.caps[0].len();
        let assets = (0..n).map(|i| format!("X{i}")).collect();
        let obs = (0..self.caps.len())
            .map(|t| {
                (0..n)
                    .map(|i| match self.delist {
                        Some((a, day)) if a == i && t > day => None,
                        d => Some(Observation {
                            cap: self.caps[t][i],
                            total_return_factor: self.trf[t][i],
                            delisted: d == Some((i, t)),
                        }),
                    })
                    .collect()
            })
            .collect();
        MarketDataSet::new(dates, assets, obs).unwrap()
    }
}

pub fn panel(dividends: bool, delisting: bool) -> impl Strategy<Value = Panel> {
    (2usize..6, 3usize..30)
        .prop_flat_map(move |(n, days)| {
            (
                prop::collection::vec(prop::collection::vec(-0.05f64..0.05, n), days),
                prop::collection::vec(prop::collection::vec(0.0f64..0.02, n), days),
                prop::collection::vec(0.2f64..5.0, n),
                0..n,
                1..days,
            )
        })
        .prop_map(move |(moves, divs, start, a, day)| {
            let mut cap = start;
            let mut caps = Vec::new();
            let mut trf = Vec::new();
            for (t, (m, d)) in moves.iter().zip(&divs).enumerate() {
                let mut f = vec![1.0; cap.len()];
                if t > 0 {
                    for i in 0..cap.len() {
                        let g = m[i].exp();
                        let div = if dividends { d[i] } else { 0.0 };
                        cap[i] *= g;
                        f[i] = g * (1.0 + div);
                    }
                }
                caps.push(cap.clone());
                trf.push(f);
            }
            Panel { caps, trf, delist: (delisting && cap.len() > 2).then_some((a, day)) }
        })
}

pub fn family() -> impl Strategy<Value = PortfolioSpec> {
    prop_oneof![
        Just(PortfolioSpec::Market),
        Just(PortfolioSpec::EqualWeight),
        (-2.0f64..0.95).prop_map(|p| PortfolioSpec::Diversity { p }),
        (-1.0f64..0.9, 1usize..4).prop_map(|(r, m)| PortfolioSpec::LargeRank { r, m }),
        (-1.0f64..0.9, 1usize..4).prop_map(|(r, m)| PortfolioSpec::SmallRank { r, m }),
        (0.1f64..0.9, -2.0f64..-0.1).prop_map(|(a, b)| PortfolioSpec::Mixed { p_plus: a, p_minus: b }),
    ]
}

pub fn assert_conserves(l: &Ledger, data: &MarketDataSet) {
    for t in 1..l.records.len() {
        let (prev, r) = (&l.records[t - 1], &l.records[t]);
        let gross: f64 = prev
            .implemented_weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, w)| w * data.get(t, i).unwrap().total_return_factor)
            .sum();
        let want = prev.wealth * gross - r.cost;
        assert!((r.wealth - want).abs() <= 1e-12 * want, "day {t}: {} vs {want}", r.wealth);
        assert!((r.costs_paid - prev.costs_paid - r.cost).abs() <= 1e-15 * r.costs_paid.max(1.0));
    }
}
