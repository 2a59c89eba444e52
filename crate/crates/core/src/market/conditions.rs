use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::path::MarketPath;
use super::rank::rank_order;
use crate::error::{Result, SptError};

/// Smallest eigenvalues at or below this count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-14;

/// Empirical versions of the regularity constants along one path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    /// Smallest eigenvalue of `a(t)` over the path.
    pub eps_hat: f64,
    /// Largest eigenvalue of `a(t)` over the path.
    pub k_hat: f64,
    /// `1 - max_t μ_(1)(t)`.
    pub delta_hat: f64,
    /// `1 - mean_t μ_(1)(t)` (left-endpoint time average).
    pub wd_delta_hat: f64,
    /// `min_t μ_(n)(t)`.
    pub phi_hat: f64,
    /// `min_t μ_(m)(t)` for the requested `m`.
    pub kappa_hat: f64,
    pub m_for_lf: usize,
    /// Set when `eps_hat` is not positive (non-degeneracy fails).
    pub degenerate: bool,
}

pub fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(SptError::Domain(format!("covariance is {}x{}", a.nrows(), a.ncols())));
    }
    let scale = a.amax().max(1.0);
    for i in 0..a.nrows() {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                return Err(SptError::Domain(format!(
                    "covariance not symmetric at ({i},{j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// `(min, max)` eigenvalue of a symmetric matrix.
pub fn eigen_range(a: &DMatrix<f64>) -> Result<(f64, f64)> {
    check_symmetric(a)?;
    let ev = SymmetricEigen::new(a.clone()).eigenvalues;
    Ok((ev.min(), ev.max()))
}

/// Running extremes for [`ConditionReport`]; feed it every grid point.
#[derive(Clone, Debug)]
pub struct ConditionTracker {
    m: usize,
    eps: f64,
    k: f64,
    max_top: f64,
    sum_top: f64,
    n_top: usize,
    min_bottom: f64,
    min_mth: f64,
    perm: Vec<usize>,
}

impl ConditionTracker {
    pub fn new(m_for_lf: usize) -> Self {
        ConditionTracker {
            m: m_for_lf,
            eps: f64::INFINITY,
            k: f64::NEG_INFINITY,
            max_top: f64::NEG_INFINITY,
            sum_top: 0.0,
            n_top: 0,
            min_bottom: f64::INFINITY,
            min_mth: f64::INFINITY,
            perm: Vec::new(),
        }
    }

    pub fn observe_cov(&mut self, a: &DMatrix<f64>) -> Result<()> {
        let (lo, hi) = eigen_range(a)?;
        self.eps = self.eps.min(lo);
        self.k = self.k.max(hi);
        Ok(())
    }

    /// `count_in_average` is false for the terminal grid point, which the
    /// left-endpoint time average excludes.
    pub fn observe_weights(&mut self, w: &[f64], count_in_average: bool) {
        rank_order(w, &mut self.perm);
        let top = w[self.perm[0]];
        self.max_top = self.max_top.max(top);
        if count_in_average {
            self.sum_top += top;
            self.n_top += 1;
        }
        self.min_bottom = self.min_bottom.min(w[*self.perm.last().unwrap()]);
        let m = self.m.clamp(1, w.len());
        self.min_mth = self.min_mth.min(w[self.perm[m - 1]]);
    }

    pub fn report(&self) -> ConditionReport {
        // clamp eigenvalue round-off so eps_hat <= k_hat always holds
        let eps_hat = self.eps.min(self.k);
        let mean_top = if self.n_top > 0 { self.sum_top / self.n_top as f64 } else { self.max_top };
        ConditionReport {
            eps_hat,
            k_hat: self.k,
            delta_hat: 1.0 - self.max_top,
            wd_delta_hat: (1.0 - mean_top).max(1.0 - self.max_top),
            phi_hat: self.min_bottom,
            kappa_hat: self.min_mth,
            m_for_lf: self.m,
            degenerate: eps_hat <= DEGENERACY_TOL,
        }
    }
}

/// Evaluates the empirical regularity constants of `path`.
pub fn check_conditions(path: &MarketPath, m_for_lf: usize) -> Result<ConditionReport> {
    let n = path.n_assets();
    if m_for_lf == 0 || m_for_lf > n {
        return Err(SptError::Config(format!("m_for_lf must be in 1..={n}, got {m_for_lf}")));
    }
    let mut tr = ConditionTracker::new(m_for_lf);
    match &path.cov {
        super::path::CovSeries::Constant(a) => tr.observe_cov(a)?,
        super::path::CovSeries::PerStep(v) => {
            for a in v {
                tr.observe_cov(a)?;
            }
        }
    }
    let last = path.weights.len().saturating_sub(1);
    for (t, w) in path.weights.rows().enumerate() {
        tr.observe_weights(w, t < last || last == 0);
    }
    Ok(tr.report())
}
