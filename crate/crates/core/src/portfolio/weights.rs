use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SptError};

/// Tolerance on `Σ π_i = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A long-only, fully invested allocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        check_simplex(&entries)?;
        Ok(WeightVector(entries))
    }

    pub fn equal(n: usize) -> Self {
        WeightVector(vec![1.0 / n as f64; n])
    }

    /// Callers guarantee the simplex invariant.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(check_simplex(&entries).is_ok(), "{entries:?}");
        WeightVector(entries)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for WeightVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = SptError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        WeightVector::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Vec<f64> {
        w.0
    }
}

pub fn check_simplex(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(SptError::Domain("weight vector is empty".into()));
    }
    if let Some((index, &value)) = w.iter().enumerate().find(|(_, x)| !(**x >= 0.0 && x.is_finite())) {
        return Err(SptError::NegativeWeight { index, value });
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(SptError::Domain(format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

/// Checks that `mu` lies in the open simplex.
pub fn check_open_simplex(mu: &[f64]) -> Result<()> {
    if let Some((i, x)) = mu.iter().enumerate().find(|(_, x)| !(**x > 0.0 && x.is_finite())) {
        return Err(SptError::Domain(format!("market weight {i} is {x}, must be positive")));
    }
    check_simplex(mu)
}
