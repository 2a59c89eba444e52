use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::path::{market_weights_into, CovSeries, MarketPath, Series};
use super::regime::enforce_regime_with;
use super::spec::{Drift, MarketSpec, Regime, Volatility};
use crate::error::{Result, SptError};
use crate::par::{try_map_indices, Execution};

/// Random stream for path `path_index` of a run seeded with `seed`.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Incremental log-Euler simulation of a single path.
///
/// Consumers that only need running statistics (wealth ratios, condition
/// extremes) can drive a stepper directly instead of materializing a
/// [`MarketPath`].
pub struct PathStepper<'a> {
    spec: &'a MarketSpec,
    rng: ChaCha8Rng,
    n_steps: usize,
    h: f64,
    step: usize,
    log_caps: Vec<f64>,
    caps: Vec<f64>,
    prev_caps: Vec<f64>,
    weights: Vec<f64>,
    prev_weights: Vec<f64>,
    drift: Vec<f64>,
    sigma: DMatrix<f64>,
    cov: DMatrix<f64>,
    noise: Vec<f64>,
    perm: Vec<usize>,
    projections: usize,
}

impl<'a> PathStepper<'a> {
    pub fn new(spec: &'a MarketSpec, seed: u64, path_index: u64) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_assets;
        let d = spec.n_drivers;
        let mut s = PathStepper {
            spec,
            rng: path_rng(seed, path_index),
            n_steps: spec.n_steps(),
            h: spec.effective_step(),
            step: 0,
            log_caps: vec![0.0; n],
            caps: spec.initial_caps.clone(),
            prev_caps: spec.initial_caps.clone(),
            weights: vec![0.0; n],
            prev_weights: vec![0.0; n],
            drift: vec![0.0; n],
            sigma: DMatrix::zeros(n, d),
            cov: DMatrix::zeros(n, n),
            noise: vec![0.0; d],
            perm: Vec::with_capacity(n),
            projections: 0,
        };
        market_weights_into(&s.caps, &mut s.weights)?;
        s.apply_regime()?;
        s.log_caps.iter_mut().zip(&s.caps).for_each(|(l, x)| *l = x.ln());
        s.prev_caps.copy_from_slice(&s.caps);
        s.prev_weights.copy_from_slice(&s.weights);
        if let Volatility::Constant(sig) = &spec.volatility {
            s.sigma.copy_from(sig);
            s.cov = sig * sig.transpose();
        } else {
            s.eval_volatility()?;
        }
        Ok(s)
    }

    pub fn n_assets(&self) -> usize {
        self.spec.n_assets
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Steps taken so far.
    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.h
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.n_steps
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    pub fn prev_caps(&self) -> &[f64] {
        &self.prev_caps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prev_weights(&self) -> &[f64] {
        &self.prev_weights
    }

    /// Covariation at the left endpoint of the most recent step (or at t=0
    /// before the first step).
    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Number of steps on which the regime projection moved the weights.
    pub fn projections(&self) -> usize {
        self.projections
    }

    fn eval_volatility(&mut self) -> Result<()> {
        let t = self.time();
        if let Volatility::Function(f) = &self.spec.volatility {
            f(t, &self.caps, &mut self.sigma);
            if let Some(pos) = self.sigma.iter().position(|x| !x.is_finite()) {
                return Err(SptError::Simulation {
                    time: t,
                    asset: pos % self.spec.n_assets,
                    what: "non-finite volatility".into(),
                });
            }
            self.cov = &self.sigma * self.sigma.transpose();
        }
        Ok(())
    }

    fn apply_regime(&mut self) -> Result<()> {
        if self.spec.regime == Regime::Free {
            return Ok(());
        }
        if enforce_regime_with(&mut self.weights, &self.spec.regime, &mut self.perm)? {
            self.projections += 1;
            let total: f64 = self.caps.iter().sum();
            for (x, w) in self.caps.iter_mut().zip(&self.weights) {
                *x = w * total;
            }
            market_weights_into(&self.caps, &mut self.weights)?;
        }
        Ok(())
    }

    /// Takes one step; returns `false` once the horizon has been reached.
    pub fn advance(&mut self) -> Result<bool> {
        if self.is_done() {
            return Ok(false);
        }
        let spec = self.spec;
        let n = spec.n_assets;
        let t = self.time();
        if self.step > 0 {
            self.eval_volatility()?;
        }
        match &spec.drift {
            Drift::Constant(b) => self.drift.copy_from_slice(b),
            Drift::Function(f) => f(t, &self.caps, &mut self.drift),
        }
        if let Some(i) = self.drift.iter().position(|x| !x.is_finite()) {
            return Err(SptError::Simulation { time: t, asset: i, what: "non-finite drift".into() });
        }

        let k = spec.noise_substeps;
        let scale = (self.h / k as f64).sqrt();
        self.noise.iter_mut().for_each(|z| *z = 0.0);
        for _ in 0..k {
            for z in self.noise.iter_mut() {
                let draw: f64 = self.rng.sample(StandardNormal);
                *z += scale * draw;
            }
        }

        self.prev_caps.copy_from_slice(&self.caps);
        self.prev_weights.copy_from_slice(&self.weights);
        for i in 0..n {
            let mut incr = (self.drift[i] - 0.5 * self.cov[(i, i)]) * self.h;
            for (nu, dw) in self.noise.iter().enumerate() {
                incr += self.sigma[(i, nu)] * dw;
            }
            self.log_caps[i] += incr;
            let x = self.log_caps[i].exp();
            if !(x.is_finite() && x > 0.0) {
                return Err(SptError::Simulation {
                    time: t + self.h,
                    asset: i,
                    what: format!("capitalization left (0, inf): log-cap {}", self.log_caps[i]),
                });
            }
            self.caps[i] = x;
        }
        market_weights_into(&self.caps, &mut self.weights)?;
        if spec.regime != Regime::Free {
            let before = self.projections;
            self.apply_regime()?;
            if self.projections != before {
                for (l, x) in self.log_caps.iter_mut().zip(&self.caps) {
                    *l = x.ln();
                }
            }
        }
        self.step += 1;
        Ok(true)
    }
}

/// Simulates and stores one full path.
pub fn simulate_path(spec: &MarketSpec, seed: u64, path_index: u64) -> Result<MarketPath> {
    let mut stepper = PathStepper::new(spec, seed, path_index)?;
    let n = spec.n_assets;
    let steps = stepper.n_steps();
    let h = stepper.step_size();
    let mut caps = Series::new(n);
    let mut weights = Series::new(n);
    caps.push(stepper.caps());
    weights.push(stepper.weights());
    let constant = spec.has_constant_volatility();
    let mut covs = Vec::new();
    while stepper.advance()? {
        if !constant {
            covs.push(stepper.cov().clone());
        }
        caps.push(stepper.caps());
        weights.push(stepper.weights());
    }
    let cov = if constant { CovSeries::Constant(stepper.cov().clone()) } else { CovSeries::PerStep(covs) };
    Ok(MarketPath { times: (0..=steps).map(|i| i as f64 * h).collect(), caps, weights, cov, seed, path_index })
}

/// Simulates `n_paths` independent paths; path `i` uses substream `i` of `seed`.
pub fn simulate_paths(spec: &MarketSpec, n_paths: usize, seed: u64) -> Result<Vec<MarketPath>> {
    simulate_paths_with(Execution::default(), spec, n_paths, seed)
}

pub fn simulate_paths_with(exec: Execution, spec: &MarketSpec, n_paths: usize, seed: u64) -> Result<Vec<MarketPath>> {
    if n_paths == 0 {
        return Err(SptError::Config("n_paths must be positive".into()));
    }
    spec.validate()?;
    try_map_indices(exec, n_paths, |i| simulate_path(spec, seed, i as u64))
}
