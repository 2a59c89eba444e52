use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::StandardNormal;

use super::data::{MarketDataSet, Observation};
use crate::error::Result;
use crate::market::path_rng;

pub const SYNTHETIC_SEED: u64 = 20_240_601;
pub const SYNTHETIC_ASSETS: usize = 10;
pub const SYNTHETIC_DAYS: usize = 500;
/// `S04` trades for the last time on this day index.
pub const SYNTHETIC_DELIST_DAY: usize = 350;
/// `S09` first trades on this day index.
pub const SYNTHETIC_LISTING_DAY: usize = 120;

/// Weekdays starting at `start` (or the next weekday).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Deterministic 10-asset, 500-day panel with one delisting and one new
/// listing.
///
/// Prices follow independent log-normal daily moves with asset-specific
/// volatilities; even-indexed assets pay a 1% dividend every 63 days, which
/// lowers cap by the payout while `total_return_factor` reinvests it.
pub fn synthetic_dataset() -> Result<MarketDataSet> {
    let dates = business_days(NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date"), SYNTHETIC_DAYS);
    let assets: Vec<String> = (0..SYNTHETIC_ASSETS).map(|i| format!("S{i:02}")).collect();
    let mut obs = vec![vec![None; SYNTHETIC_ASSETS]; SYNTHETIC_DAYS];
    for i in 0..SYNTHETIC_ASSETS {
        let mut rng = path_rng(SYNTHETIC_SEED, i as u64);
        let sigma = 0.01 + 0.002 * i as f64;
        let drift = 2e-4 - 2e-5 * i as f64;
        let mut cap = 10.0 * 0.7f64.powi(i as i32);
        let first = if i == SYNTHETIC_ASSETS - 1 { SYNTHETIC_LISTING_DAY } else { 0 };
        let last = if i == 4 { SYNTHETIC_DELIST_DAY } else { SYNTHETIC_DAYS - 1 };
        for (t, row) in obs.iter_mut().enumerate().take(last + 1).skip(first) {
            let total_return_factor = if t == first {
                1.0
            } else {
                let z: f64 = rng.sample(StandardNormal);
                let g = (drift - 0.5 * sigma * sigma + sigma * z).exp();
                cap *= if i % 2 == 0 && t % 63 == 0 { g / 1.01 } else { g };
                g
            };
            row[i] = Some(Observation { cap, total_return_factor, delisted: t == last && last < SYNTHETIC_DAYS - 1 });
        }
    }
    MarketDataSet::new(dates, assets, obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_events() {
        let d = synthetic_dataset().unwrap();
        assert_eq!((d.n_dates(), d.n_assets()), (SYNTHETIC_DAYS, SYNTHETIC_ASSETS));
        assert!(d.get(SYNTHETIC_DELIST_DAY, 4).unwrap().delisted);
        assert!(d.get(SYNTHETIC_DELIST_DAY + 1, 4).is_none());
        assert!(d.get(SYNTHETIC_LISTING_DAY - 1, 9).is_none());
        assert!(d.get(SYNTHETIC_LISTING_DAY, 9).is_some());
        assert!(d.dates.iter().all(|x| !matches!(x.weekday(), Weekday::Sat | Weekday::Sun)));
    }

    #[test]
    fn deterministic_and_round_trips() {
        let a = synthetic_dataset().unwrap();
        assert_eq!(a, synthetic_dataset().unwrap());
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert_eq!(super::super::data::read_market_data(buf.as_slice()).unwrap(), a);
    }
}
