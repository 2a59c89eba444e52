//! Columnar CSV exchange for simulated paths.
//!
//! Paths: `t,asset_id,cap,weight`, one row per (time, asset).
//! Covariances: `t,i,j,a_ij`, one row per (step, i, j) at the step's left
//! endpoint. Floats are written in shortest round-trip form.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::path::{CovSeries, MarketPath, Series};
use crate::error::{Result, SptError};

pub const PATH_HEADER: &str = "t,asset_id,cap,weight";
pub const COV_HEADER: &str = "t,i,j,a_ij";

pub fn write_path_csv<W: Write>(path: &MarketPath, mut out: W) -> Result<()> {
    writeln!(out, "{PATH_HEADER}")?;
    for (t, time) in path.times.iter().enumerate() {
        for (i, (c, w)) in path.caps.row(t).iter().zip(path.weights.row(t)).enumerate() {
            writeln!(out, "{time},{i},{c},{w}")?;
        }
    }
    Ok(())
}

pub fn write_cov_csv<W: Write>(path: &MarketPath, mut out: W) -> Result<()> {
    writeln!(out, "{COV_HEADER}")?;
    for s in 0..path.n_steps() {
        let a = path.cov.at(s);
        let t = path.times[s];
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                writeln!(out, "{t},{i},{j},{}", a[(i, j)])?;
            }
        }
    }
    Ok(())
}

fn reader<R: Read>(input: R, header: &str) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let found = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return Err(SptError::Parse { row: 1, msg: format!("expected header `{header}`, found `{found}`") });
    }
    Ok(rdr)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, row: usize) -> Result<T> {
    rec.get(k)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| SptError::Parse { row, msg: format!("bad or missing field {k}") })
}

/// Reads a path and its covariance export back into a [`MarketPath`].
///
/// Weights are recomputed from the capitalizations and checked against the
/// stored column.
pub fn read_path_csv<R1: Read, R2: Read>(paths: R1, cov: R2) -> Result<MarketPath> {
    let mut rdr = reader(paths, PATH_HEADER)?;
    let mut times: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64, f64)>> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        let t: f64 = field(&rec, 0, row)?;
        let i: usize = field(&rec, 1, row)?;
        let c: f64 = field(&rec, 2, row)?;
        let w: f64 = field(&rec, 3, row)?;
        if times.last() != Some(&t) {
            times.push(t);
            rows.push(Vec::new());
        }
        rows.last_mut().unwrap().push((i, c, w));
    }
    let n = rows.first().map(|r| r.len()).unwrap_or(0);
    if n == 0 {
        return Err(SptError::Parse { row: 2, msg: "no data rows".into() });
    }
    let mut caps = Series::new(n);
    let mut stored = Vec::with_capacity(n * rows.len());
    for (t, r) in rows.iter().enumerate() {
        if r.len() != n || r.iter().enumerate().any(|(k, (i, _, _))| *i != k) {
            return Err(SptError::Parse { row: 2 + t * n, msg: "assets must be listed 0..n in order".into() });
        }
        let c: Vec<f64> = r.iter().map(|x| x.1).collect();
        caps.push(&c);
        stored.extend(r.iter().map(|x| x.2));
    }

    let mut crdr = reader(cov, COV_HEADER)?;
    let mut covs: Vec<DMatrix<f64>> = Vec::new();
    let mut last_t = f64::NAN;
    for (k, rec) in crdr.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        let t: f64 = field(&rec, 0, row)?;
        let i: usize = field(&rec, 1, row)?;
        let j: usize = field(&rec, 2, row)?;
        let a: f64 = field(&rec, 3, row)?;
        if i >= n || j >= n {
            return Err(SptError::Parse { row, msg: format!("index ({i},{j}) out of range") });
        }
        if t != last_t {
            covs.push(DMatrix::zeros(n, n));
            last_t = t;
        }
        covs.last_mut().unwrap()[(i, j)] = a;
    }
    let cov = if !covs.is_empty() && covs.iter().all(|a| a == &covs[0]) {
        CovSeries::Constant(covs.swap_remove(0))
    } else {
        CovSeries::PerStep(covs)
    };
    let path = MarketPath::from_caps(times, caps, cov)?;
    for (k, (a, b)) in path.weights.rows().flatten().zip(&stored).enumerate() {
        if (a - b).abs() > 1e-12 {
            return Err(SptError::Data(format!("stored weight at row {} disagrees with caps", k + 2)));
        }
    }
    Ok(path)
}
