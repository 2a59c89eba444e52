use nalgebra::DMatrix;

use crate::error::{Result, SptError};

/// Market weights `μ_i = X_i / Σ_j X_j`.
pub fn market_weights(caps: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; caps.len()];
    market_weights_into(caps, &mut out)?;
    Ok(out)
}

pub fn market_weights_into(caps: &[f64], out: &mut [f64]) -> Result<()> {
    if let Some((i, x)) = caps.iter().enumerate().find(|(_, x)| !(**x > 0.0 && x.is_finite())) {
        return Err(SptError::Domain(format!("capitalization of asset {i} is {x}, must be positive")));
    }
    let total: f64 = caps.iter().sum();
    for (o, x) in out.iter_mut().zip(caps) {
        *o = x / total;
    }
    Ok(())
}

/// Covariation `a(t) = σ(t)σ(t)'` at the left endpoint of every step.
#[derive(Clone, Debug, PartialEq)]
pub enum CovSeries {
    Constant(DMatrix<f64>),
    PerStep(Vec<DMatrix<f64>>),
}

impl CovSeries {
    pub fn at(&self, step: usize) -> &DMatrix<f64> {
        match self {
            CovSeries::Constant(a) => a,
            CovSeries::PerStep(v) => &v[step],
        }
    }
}

/// Row-major `times × assets` table.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    n: usize,
    data: Vec<f64>,
}

impl Series {
    pub fn new(n: usize) -> Self {
        Series { n, data: Vec::new() }
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || !data.len().is_multiple_of(n) {
            return Err(SptError::Domain("series length is not a multiple of n".into()));
        }
        Ok(Series { n, data })
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.n);
        self.data.extend_from_slice(row);
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.n..(t + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.n.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }
}

/// One discretized realization of the market.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketPath {
    pub times: Vec<f64>,
    pub caps: Series,
    pub weights: Series,
    /// One entry per step (left endpoints), `times.len() - 1` of them.
    pub cov: CovSeries,
    pub seed: u64,
    pub path_index: u64,
}

impl MarketPath {
    /// Builds a path from capitalizations, computing the weights.
    pub fn from_caps(times: Vec<f64>, caps: Series, cov: CovSeries) -> Result<Self> {
        if times.len() != caps.len() {
            return Err(SptError::Dimension { expected: times.len(), found: caps.len() });
        }
        if let CovSeries::PerStep(v) = &cov {
            if v.len() + 1 != times.len() {
                return Err(SptError::Dimension { expected: times.len() - 1, found: v.len() });
            }
        }
        let mut weights = Series::new(caps.width());
        let mut buf = vec![0.0; caps.width()];
        for row in caps.rows() {
            market_weights_into(row, &mut buf)?;
            weights.push(&buf);
        }
        Ok(MarketPath { times, caps, weights, cov, seed: 0, path_index: 0 })
    }

    pub fn n_assets(&self) -> usize {
        self.caps.width()
    }

    pub fn n_steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.times.first().copied().unwrap_or(0.0)
    }

    /// Largest grid index whose time does not exceed `t` (relative to start).
    pub fn index_at(&self, t: f64) -> usize {
        let t0 = self.times[0];
        self.times.iter().rposition(|&s| s - t0 <= t + 1e-9).unwrap_or(0)
    }

    /// Weight series recomputed from the stored capitalizations.
    pub fn compute_weights(&self) -> Result<Series> {
        let mut out = Series::new(self.n_assets());
        let mut buf = vec![0.0; self.n_assets()];
        for row in self.caps.rows() {
            market_weights_into(row, &mut buf)?;
            out.push(&buf);
        }
        Ok(out)
    }
}
