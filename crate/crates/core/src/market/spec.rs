use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Result, SptError};

/// Rate-of-return callback: `(t, caps, out)` writes `b_i(t)` into `out`.
pub type DriftFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
/// Volatility callback: `(t, caps, out)` writes the n×d matrix `σ(t)` into `out`.
pub type VolatilityFn = dyn Fn(f64, &[f64], &mut DMatrix<f64>) + Send + Sync;

#[derive(Clone)]
pub enum Drift {
    Constant(Vec<f64>),
    Function(Arc<DriftFn>),
}

#[derive(Clone)]
pub enum Volatility {
    Constant(DMatrix<f64>),
    Function(Arc<VolatilityFn>),
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Constant(b) => f.debug_tuple("Constant").field(b).finish(),
            Drift::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl fmt::Debug for Volatility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Volatility::Constant(s) => f.debug_tuple("Constant").field(s).finish(),
            Volatility::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Barrier imposed on the market weights after every step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regime {
    Free,
    /// Smallest weight stays above `phi` (no-failure).
    ReflectNf {
        phi: f64,
    },
    /// The `m`-th largest weight stays above `kappa` (limited failure).
    ReflectLf {
        m: usize,
        kappa: f64,
    },
    /// Largest weight stays below `1 - delta` (diversity).
    ReflectDiversity {
        delta: f64,
    },
}

impl Regime {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Regime::Free => Ok(()),
            Regime::ReflectNf { phi } => {
                if !(phi > 0.0 && phi * (n as f64) < 1.0) {
                    return Err(SptError::Config(format!("reflect_nf requires 0 < phi < 1/n, got phi={phi}, n={n}")));
                }
                Ok(())
            }
            Regime::ReflectLf { m, kappa } => {
                if m == 0 || m > n {
                    return Err(SptError::Config(format!("reflect_lf requires 1 <= m <= n, got m={m}, n={n}")));
                }
                if !(kappa > 0.0 && kappa * (m as f64) < 1.0) {
                    return Err(SptError::Config(format!(
                        "reflect_lf requires 0 < kappa < 1/m, got kappa={kappa}, m={m}"
                    )));
                }
                Ok(())
            }
            Regime::ReflectDiversity { delta } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(SptError::Config(format!("reflect_diversity requires 0 < delta < 1, got {delta}")));
                }
                // the cap must leave room for n weights summing to one
                if (n as f64) * (1.0 - delta) <= 1.0 {
                    return Err(SptError::Config(format!(
                        "reflect_diversity infeasible: n(1-delta) = {} <= 1",
                        n as f64 * (1.0 - delta)
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Coefficients and discretization of an Itô capitalization model
/// `dX_i = X_i (b_i dt + Σ_ν σ_iν dW_ν)`.
#[derive(Clone, Debug)]
pub struct MarketSpec {
    pub n_assets: usize,
    pub n_drivers: usize,
    pub drift: Drift,
    pub volatility: Volatility,
    pub initial_caps: Vec<f64>,
    pub step: f64,
    pub horizon: f64,
    pub regime: Regime,
    /// Number of standard normal draws summed into each Brownian increment.
    ///
    /// A spec with step `h` and `k` substeps consumes the random stream
    /// exactly like a spec with step `h/k` and one substep, so the two
    /// discretize the same Brownian path.
    pub noise_substeps: usize,
}

impl MarketSpec {
    /// Constant coefficients with `σ = sigma · I_n` (so `d = n`).
    pub fn isotropic(drift: Vec<f64>, sigma: f64, initial_caps: Vec<f64>, step: f64, horizon: f64) -> Result<Self> {
        let n = initial_caps.len();
        MarketSpec {
            n_assets: n,
            n_drivers: n,
            drift: Drift::Constant(drift),
            volatility: Volatility::Constant(DMatrix::identity(n, n) * sigma),
            initial_caps,
            step,
            horizon,
            regime: Regime::Free,
            noise_substeps: 1,
        }
        .validated()
    }

    pub fn with_regime(mut self, regime: Regime) -> Result<Self> {
        self.regime = regime;
        self.validated()
    }

    pub fn with_noise_substeps(mut self, k: usize) -> Result<Self> {
        self.noise_substeps = k;
        self.validated()
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = horizon;
        self.validated()
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        self.step = step;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_assets;
        if n == 0 {
            return Err(SptError::Config("n_assets must be positive".into()));
        }
        if self.n_drivers < n {
            return Err(SptError::Config(format!("n_drivers ({}) must be >= n_assets ({n})", self.n_drivers)));
        }
        if self.initial_caps.len() != n {
            return Err(SptError::Config(format!("expected {n} initial caps, got {}", self.initial_caps.len())));
        }
        if let Some((i, x)) = self.initial_caps.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
            return Err(SptError::Config(format!("initial cap of asset {i} must be positive, got {x}")));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(SptError::Config(format!("step must be positive, got {}", self.step)));
        }
        if !(self.horizon.is_finite() && self.step < self.horizon) {
            return Err(SptError::Config(format!(
                "step ({}) must be smaller than horizon ({})",
                self.step, self.horizon
            )));
        }
        if self.noise_substeps == 0 {
            return Err(SptError::Config("noise_substeps must be >= 1".into()));
        }
        if let Drift::Constant(b) = &self.drift {
            if b.len() != n {
                return Err(SptError::Config(format!("drift has {} entries, expected {n}", b.len())));
            }
        }
        if let Volatility::Constant(s) = &self.volatility {
            if s.nrows() != n || s.ncols() != self.n_drivers {
                return Err(SptError::Config(format!(
                    "sigma is {}x{}, expected {n}x{}",
                    s.nrows(),
                    s.ncols(),
                    self.n_drivers
                )));
            }
        }
        self.regime.validate(n)
    }

    /// Number of grid steps; the effective step is `horizon / n_steps`.
    pub fn n_steps(&self) -> usize {
        ((self.horizon / self.step) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn effective_step(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }

    pub fn has_constant_volatility(&self) -> bool {
        matches!(self.volatility, Volatility::Constant(_))
    }
}
