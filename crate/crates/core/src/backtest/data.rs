use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Result, SptError};

pub const DATA_HEADER: &str = "date,asset_id,cap,total_return_factor,delisted";

/// One asset on one trading day.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub cap: f64,
    /// Gross growth over `(t−1, t]` including reinvested distributions.
    pub total_return_factor: f64,
    /// Last listed day; the position is liquidated at the day's close.
    pub delisted: bool,
}

/// Daily panel of capitalizations and total-return factors.
///
/// Each asset is listed over one contiguous run of dates, ending either at
/// the last date or on a day flagged `delisted`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketDataSet {
    pub dates: Vec<NaiveDate>,
    /// In order of first appearance.
    pub assets: Vec<String>,
    obs: Vec<Vec<Option<Observation>>>,
}

impl MarketDataSet {
    /// Builds and validates a panel; `obs[t][i]` is `None` when asset `i` is
    /// not listed on `dates[t]`.
    pub fn new(dates: Vec<NaiveDate>, assets: Vec<String>, obs: Vec<Vec<Option<Observation>>>) -> Result<Self> {
        if obs.len() != dates.len() {
            return Err(SptError::Dimension { expected: dates.len(), found: obs.len() });
        }
        if let Some(row) = obs.iter().find(|r| r.len() != assets.len()) {
            return Err(SptError::Dimension { expected: assets.len(), found: row.len() });
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SptError::Data("dates must be strictly increasing".into()));
        }
        let set = MarketDataSet { dates, assets, obs };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        for (i, id) in self.assets.iter().enumerate() {
            let mut state = 0u8; // 0 not yet listed, 1 listed, 2 gone
            for (t, row) in self.obs.iter().enumerate() {
                let date = self.dates[t];
                match (state, row[i]) {
                    (2, Some(_)) => {
                        return Err(SptError::Data(format!("asset {id} reappears on {date} after leaving the panel")))
                    }
                    (_, Some(o)) => {
                        if !(o.cap > 0.0 && o.cap.is_finite()) {
                            return Err(SptError::Data(format!("asset {id} has non-positive cap {} on {date}", o.cap)));
                        }
                        if !(o.total_return_factor > 0.0 && o.total_return_factor.is_finite()) {
                            return Err(SptError::Data(format!(
                                "asset {id} has non-positive total_return_factor {} on {date}",
                                o.total_return_factor
                            )));
                        }
                        state = if o.delisted { 2 } else { 1 };
                    }
                    (1, None) => {
                        return Err(SptError::Data(format!("asset {id} has a gap on {date} without being delisted")))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn get(&self, t: usize, asset: usize) -> Option<&Observation> {
        self.obs[t][asset].as_ref()
    }

    pub fn row(&self, t: usize) -> &[Option<Observation>] {
        &self.obs[t]
    }

    /// Calendar span in years (365.25 days).
    pub fn calendar_years(&self) -> f64 {
        match (self.dates.first(), self.dates.last()) {
            (Some(a), Some(b)) => (*b - *a).num_days() as f64 / 365.25,
            _ => 0.0,
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        read_market_data(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{DATA_HEADER}")?;
        for (t, row) in self.obs.iter().enumerate() {
            for (i, o) in row.iter().enumerate() {
                if let Some(o) = o {
                    let d = self.dates[t].format("%Y-%m-%d");
                    writeln!(
                        out,
                        "{d},{},{},{},{}",
                        self.assets[i],
                        o.cap,
                        o.total_return_factor,
                        u8::from(o.delisted)
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Loads the CSV schema `date,asset_id,cap,total_return_factor,delisted`.
///
/// Rows may come in any order; `(date, asset_id)` must be unique.
pub fn read_market_data<R: Read>(input: R) -> Result<MarketDataSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let found =
        rdr.headers().map_err(|e| SptError::Parse { row: 1, msg: e.to_string() })?.iter().collect::<Vec<_>>().join(",");
    if found != DATA_HEADER {
        return Err(SptError::Parse { row: 1, msg: format!("expected header `{DATA_HEADER}`, found `{found}`") });
    }
    let mut rows: Vec<(NaiveDate, usize, Observation, usize)> = Vec::new();
    let mut assets: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| SptError::Parse { row, msg: e.to_string() })?;
        if rec.len() != 5 {
            return Err(SptError::Parse { row, msg: format!("expected 5 fields, found {}", rec.len()) });
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| SptError::Parse { row, msg: format!("bad date `{}`: {e}", &rec[0]) })?;
        let id = rec[1].to_string();
        if id.is_empty() {
            return Err(SptError::Parse { row, msg: "empty asset_id".into() });
        }
        let num = |j: usize, name: &str| -> Result<f64> {
            rec[j].parse::<f64>().map_err(|_| SptError::Parse { row, msg: format!("bad {name} `{}`", &rec[j]) })
        };
        let cap = num(2, "cap")?;
        let total_return_factor = num(3, "total_return_factor")?;
        let delisted = match &rec[4] {
            "0" => false,
            "1" => true,
            other => return Err(SptError::Parse { row, msg: format!("delisted must be 0 or 1, got `{other}`") }),
        };
        let next = assets.len();
        let i = *index.entry(id.clone()).or_insert_with(|| {
            assets.push(id);
            next
        });
        rows.push((date, i, Observation { cap, total_return_factor, delisted }, row));
    }
    let mut dates: Vec<NaiveDate> = rows.iter().map(|r| r.0).collect();
    dates.sort();
    dates.dedup();
    let mut obs = vec![vec![None; assets.len()]; dates.len()];
    for (date, i, o, row) in rows {
        let t = dates.binary_search(&date).expect("date collected above");
        if obs[t][i].is_some() {
            return Err(SptError::Parse { row, msg: format!("duplicate row for ({date}, {})", assets[i]) });
        }
        obs[t][i] = Some(o);
    }
    MarketDataSet::new(dates, assets, obs)
}
