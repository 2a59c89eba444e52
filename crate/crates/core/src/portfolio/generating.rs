use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{check_dim, Result, SptError};
use crate::market::rank_order;

/// A generating function `G` on the positive orthant.
///
/// Derivatives are exposed in scale-free form so that callers never divide
/// by tiny weights: `x_i D_i log G(x)` and `x_i x_j D²_ij G(x) / G(x)`.
pub trait GeneratingFunction: Send + Sync {
    fn log_value(&self, x: &[f64]) -> Result<f64>;

    /// Writes `x_i D_i log G(x)` into `out`.
    fn gradient_terms(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// Writes `x_i x_j D²_ij G(x) / G(x)` into `out` (n×n).
    fn scaled_hessian(&self, x: &[f64], out: &mut DMatrix<f64>) -> Result<()>;

    /// Rank cut for rank-based functions, `None` for smooth ones.
    fn rank_cut(&self) -> Option<RankCut> {
        None
    }
}

/// Evaluation of `G` at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratingFunctionValue {
    pub value: f64,
    pub log_value: f64,
    /// `x_i D_i log G(x)`.
    pub gradient_terms: Vec<f64>,
}

pub fn evaluate(g: &dyn GeneratingFunction, x: &[f64]) -> Result<GeneratingFunctionValue> {
    let log_value = g.log_value(x)?;
    let mut gradient_terms = vec![0.0; x.len()];
    g.gradient_terms(x, &mut gradient_terms)?;
    Ok(GeneratingFunctionValue { value: log_value.exp(), log_value, gradient_terms })
}

/// Which side of the rank cut a rank-based function lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RankCut {
    /// Ranks `1..=m`.
    Top(usize),
    /// Ranks `m+1..=n`.
    Bottom(usize),
}

impl RankCut {
    pub fn m(&self) -> usize {
        match *self {
            RankCut::Top(m) | RankCut::Bottom(m) => m,
        }
    }
}

/// `G ≡ 1`; generates the market portfolio.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstantGenerator;

impl GeneratingFunction for ConstantGenerator {
    fn log_value(&self, x: &[f64]) -> Result<f64> {
        check_positive(x)?;
        Ok(0.0)
    }

    fn gradient_terms(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_positive(x)?;
        check_dim(x.len(), out.len())?;
        out.fill(0.0);
        Ok(())
    }

    fn scaled_hessian(&self, x: &[f64], out: &mut DMatrix<f64>) -> Result<()> {
        check_positive(x)?;
        *out = DMatrix::zeros(x.len(), x.len());
        Ok(())
    }
}

/// Power mean `(Σ_{i∈S} x_i^p)^{1/p}` over a support `S`, with `p = 0`
/// read as `|S| · (Π_{i∈S} x_i)^{1/|S|}`.
///
/// `S` is all assets, or a block of ranks on one side of a rank cut.
#[derive(Clone, Copy, Debug)]
pub struct PowerGenerator {
    pub p: f64,
    pub cut: Option<RankCut>,
}

impl PowerGenerator {
    pub fn diversity(p: f64) -> Self {
        PowerGenerator { p, cut: None }
    }

    pub fn large_rank(r: f64, m: usize) -> Self {
        PowerGenerator { p: r, cut: Some(RankCut::Top(m)) }
    }

    pub fn small_rank(r: f64, m: usize) -> Self {
        PowerGenerator { p: r, cut: Some(RankCut::Bottom(m)) }
    }

    fn support(&self, x: &[f64]) -> Result<Vec<usize>> {
        let n = x.len();
        match self.cut {
            None => Ok((0..n).collect()),
            Some(cut) => {
                let m = cut.m();
                let max = if matches!(cut, RankCut::Top(_)) { n } else { n - 1 };
                if m == 0 || m > max {
                    return Err(SptError::Config(format!("rank cut {cut:?} out of range for n={n}")));
                }
                let mut perm = Vec::with_capacity(n);
                rank_order(x, &mut perm);
                Ok(match cut {
                    RankCut::Top(m) => perm[..m].to_vec(),
                    RankCut::Bottom(m) => perm[m..].to_vec(),
                })
            }
        }
    }

    /// Normalized weights on the support, zero elsewhere.
    fn weights(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_positive(x)?;
        check_dim(x.len(), out.len())?;
        let s = self.support(x)?;
        out.fill(f64::NEG_INFINITY);
        for &i in &s {
            out[i] = self.p * x[i].ln();
        }
        normalize_log_weights(out)
    }
}

impl GeneratingFunction for PowerGenerator {
    fn log_value(&self, x: &[f64]) -> Result<f64> {
        check_positive(x)?;
        let s = self.support(x)?;
        if self.p == 0.0 {
            let mean = s.iter().map(|&i| x[i].ln()).sum::<f64>() / s.len() as f64;
            return Ok((s.len() as f64).ln() + mean);
        }
        let logs: Vec<f64> = s.iter().map(|&i| self.p * x[i].ln()).collect();
        Ok(log_sum_exp(&logs) / self.p)
    }

    fn gradient_terms(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.weights(x, out)
    }

    fn scaled_hessian(&self, x: &[f64], out: &mut DMatrix<f64>) -> Result<()> {
        let n = x.len();
        let mut w = vec![0.0; n];
        self.weights(x, &mut w)?;
        *out = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { w[i] } else { 0.0 };
            (1.0 - self.p) * (w[i] * w[j] - d)
        });
        Ok(())
    }

    fn rank_cut(&self) -> Option<RankCut> {
        self.cut
    }
}

/// `Ĝ = G_{p+} + G_{p−}`.
#[derive(Clone, Copy, Debug)]
pub struct MixedGenerator {
    pub plus: PowerGenerator,
    pub minus: PowerGenerator,
}

/// Mixing proportion `𝔭` and its complement, each computed without
/// cancellation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mixing {
    pub proportion: f64,
    pub complement: f64,
}

impl MixedGenerator {
    pub fn new(p_plus: f64, p_minus: f64) -> Self {
        MixedGenerator { plus: PowerGenerator::diversity(p_plus), minus: PowerGenerator::diversity(p_minus) }
    }

    pub fn mixing(&self, x: &[f64]) -> Result<Mixing> {
        let lp = self.plus.log_value(x)?;
        let lm = self.minus.log_value(x)?;
        Ok(Mixing { proportion: logistic(lp - lm), complement: logistic(lm - lp) })
    }
}

impl GeneratingFunction for MixedGenerator {
    fn log_value(&self, x: &[f64]) -> Result<f64> {
        Ok(log_sum_exp(&[self.plus.log_value(x)?, self.minus.log_value(x)?]))
    }

    fn gradient_terms(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let mix = self.mixing(x)?;
        let mut minus = vec![0.0; x.len()];
        self.plus.gradient_terms(x, out)?;
        self.minus.gradient_terms(x, &mut minus)?;
        for (o, m) in out.iter_mut().zip(&minus) {
            *o = mix.proportion * *o + mix.complement * m;
        }
        Ok(())
    }

    fn scaled_hessian(&self, x: &[f64], out: &mut DMatrix<f64>) -> Result<()> {
        let mix = self.mixing(x)?;
        let mut minus = DMatrix::zeros(0, 0);
        self.plus.scaled_hessian(x, out)?;
        self.minus.scaled_hessian(x, &mut minus)?;
        *out *= mix.proportion;
        *out += minus * mix.complement;
        Ok(())
    }
}

/// `1 / (1 + e^{−z})`.
pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Replaces log-weights by normalized weights; `-inf` entries become 0.
pub(crate) fn normalize_log_weights(v: &mut [f64]) -> Result<()> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(SptError::Domain(format!("log-weights have no finite maximum ({max})")));
    }
    let mut total = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
    Ok(())
}

pub(crate) fn check_positive(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(SptError::Domain("empty weight vector".into()));
    }
    match x.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        Some((i, v)) => Err(SptError::Domain(format!("entry {i} is {v}, must be positive"))),
        None => Ok(()),
    }
}
