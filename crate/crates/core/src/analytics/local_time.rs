use serde::Serialize;

use crate::error::{Result, SptError};
use crate::market::{rank_order, MarketPath};

/// Default bandwidth `2√h`; it must shrink more slowly than the typical
/// increment `√h` for the occupation-density estimate to be consistent.
pub fn default_bandwidth(step: f64) -> f64 {
    2.0 * step.sqrt()
}

/// Collision local time of one ranked log-gap.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalTimeSeries {
    /// `Ξ_k(t) = log(μ_(k)(t) / μ_(k+1)(t))`.
    pub gap_process: Vec<f64>,
    /// Occupation-density estimate; starts at 0 and never decreases.
    pub local_time: Vec<f64>,
    pub bandwidth: f64,
}

fn check_bandwidth(bandwidth: f64) -> Result<()> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(SptError::Config(format!("bandwidth must be positive, got {bandwidth}")));
    }
    Ok(())
}

/// Streaming form of the estimator
/// `d𝔏 = (1/(2ε)) 1{Ξ(t) < ε} (ΔΞ)²`, indicator at the left endpoint.
#[derive(Clone, Debug)]
pub struct LocalTimeAccumulator {
    bandwidth: f64,
    prev: Option<f64>,
    total: f64,
}

impl LocalTimeAccumulator {
    pub fn new(bandwidth: f64) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        Ok(LocalTimeAccumulator { bandwidth, prev: None, total: 0.0 })
    }

    /// Feeds the next gap value and returns the local-time increment it
    /// completes (0 for the first value).
    ///
    /// The increment is `Ξ(t+h) − Ξ(t)`, which understates the squared
    /// increment on steps where the underlying pair crosses; prefer
    /// [`accumulate`](Self::accumulate) when the signed increment is known.
    pub fn observe(&mut self, gap: f64) -> f64 {
        let inc = match self.prev {
            Some(g0) => self.accumulate(g0, gap - g0),
            None => 0.0,
        };
        self.prev = Some(gap);
        inc
    }

    /// Adds the contribution of one step starting at gap `gap` whose
    /// underlying log-ratio moves by `increment`; returns it.
    pub fn accumulate(&mut self, gap: f64, increment: f64) -> f64 {
        let inc = if gap < self.bandwidth { increment * increment / (2.0 * self.bandwidth) } else { 0.0 };
        self.total += inc;
        inc
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

/// Applies the estimator to an explicit nonnegative gap process.
pub fn local_time_from_gap(gap: &[f64], bandwidth: f64) -> Result<LocalTimeSeries> {
    let mut acc = LocalTimeAccumulator::new(bandwidth)?;
    if let Some((i, g)) = gap.iter().enumerate().find(|(_, g)| !(**g >= -1e-12 && g.is_finite())) {
        return Err(SptError::Domain(format!("gap process must be nonnegative, got {g} at index {i}")));
    }
    let local_time = gap
        .iter()
        .map(|&g| {
            acc.observe(g);
            acc.total()
        })
        .collect();
    Ok(LocalTimeSeries { gap_process: gap.to_vec(), local_time, bandwidth })
}

/// `log(μ_(k) / μ_(k+1))` for 1-based `k`, given the rank permutation.
pub fn ranked_gap(weights: &[f64], perm: &[usize], k: usize) -> f64 {
    (weights[perm[k - 1]] / weights[perm[k]]).ln()
}

/// Increment over one step of `log(μ_a/μ_b)`, where `a`, `b` hold ranks `k`
/// and `k+1` at the start of the step (`perm` ranks `w0`).
///
/// Equals `ΔΞ_k` unless the pair swaps during the step, in which case it is
/// the unfolded increment whose square is the step's quadratic variation.
pub fn pair_increment(w0: &[f64], w1: &[f64], perm: &[usize], k: usize) -> f64 {
    let (a, b) = (perm[k - 1], perm[k]);
    (w1[a] / w1[b]).ln() - (w0[a] / w0[b]).ln()
}

/// Local time accumulated by the gap between ranks `k` and `k+1`.
///
/// Squared increments are those of the log-ratio of the pair ranked `k`,
/// `k+1` at the left endpoint of each step.
pub fn local_time(path: &MarketPath, k: usize, bandwidth: f64) -> Result<LocalTimeSeries> {
    let n = path.n_assets();
    if k == 0 || k >= n {
        return Err(SptError::Config(format!("rank index k={k} must satisfy 1 <= k < n={n}")));
    }
    let mut acc = LocalTimeAccumulator::new(bandwidth)?;
    let mut perm = Vec::with_capacity(n);
    let mut next_perm = Vec::with_capacity(n);
    let len = path.weights.len();
    let mut gap_process = Vec::with_capacity(len);
    let mut local_time = Vec::with_capacity(len);
    rank_order(path.weights.row(0), &mut perm);
    gap_process.push(ranked_gap(path.weights.row(0), &perm, k));
    local_time.push(0.0);
    for t in 1..len {
        let (w0, w1) = (path.weights.row(t - 1), path.weights.row(t));
        acc.accumulate(gap_process[t - 1], pair_increment(w0, w1, &perm, k));
        rank_order(w1, &mut next_perm);
        gap_process.push(ranked_gap(w1, &next_perm, k));
        local_time.push(acc.total());
        std::mem::swap(&mut perm, &mut next_perm);
    }
    Ok(LocalTimeSeries { gap_process, local_time, bandwidth })
}

/// True when three or more consecutive ranks sit within `bandwidth` of each
/// other in log-gap terms, the configuration whose local time is assumed away.
pub fn is_higher_order_collision(weights: &[f64], perm: &[usize], bandwidth: f64) -> bool {
    let n = weights.len();
    (1..n.saturating_sub(1))
        .any(|k| ranked_gap(weights, perm, k) < bandwidth && ranked_gap(weights, perm, k + 1) < bandwidth)
}

/// Number of grid points (left endpoints) with a higher-order near-collision.
pub fn count_higher_order_collisions(path: &MarketPath, bandwidth: f64) -> Result<usize> {
    check_bandwidth(bandwidth)?;
    let mut perm = Vec::new();
    let last = path.weights.len().saturating_sub(1);
    Ok(path
        .weights
        .rows()
        .take(last)
        .filter(|w| {
            rank_order(w, &mut perm);
            is_higher_order_collision(w, &perm, bandwidth)
        })
        .count())
}
