use super::generating::{
    normalize_log_weights, GeneratingFunction, GeneratingFunctionValue, MixedGenerator, Mixing, PowerGenerator,
};
use super::weights::{check_open_simplex, WeightVector};
use crate::error::{Result, SptError};

/// Weights `(D_i log G + 1 − Σ_j μ_j D_j log G)·μ_i` generated by `g` at `mu`.
pub fn fgp_weights(g: &dyn GeneratingFunction, mu: &[f64]) -> Result<WeightVector> {
    check_open_simplex(mu)?;
    let mut out = vec![0.0; mu.len()];
    g.gradient_terms(mu, &mut out)?;
    let s: f64 = out.iter().sum();
    for (i, (o, m)) in out.iter_mut().zip(mu).enumerate() {
        *o += m * (1.0 - s);
        if *o < 0.0 {
            // round-off below one ulp of the weight scale is not a sign change
            if *o > -1e-15 {
                *o = 0.0;
            } else {
                return Err(SptError::NegativeWeight { index: i, value: *o });
            }
        }
    }
    Ok(WeightVector::from_raw(out))
}

/// `π_i = μ_i^p / Σ_j μ_j^p`; `p = 0` is the equal-weight portfolio.
pub fn dwp_weights(mu: &[f64], p: f64) -> Result<WeightVector> {
    power_weights(mu, p, None)
}

/// `G_p(μ) = (Σ_i μ_i^p)^{1/p}` and its gradient terms.
pub fn dwp_generating_value(mu: &[f64], p: f64) -> Result<GeneratingFunctionValue> {
    check_open_simplex(mu)?;
    super::generating::evaluate(&PowerGenerator::diversity(p), mu)
}

/// Diversity weighting with power `r` restricted to the `m` largest stocks;
/// `m = n` is the full diversity-weighted portfolio.
pub fn large_rank_weights(mu: &[f64], r: f64, m: usize) -> Result<WeightVector> {
    check_rank_cut(mu.len() + 1, m)?;
    power_weights(mu, r, Some(PowerGenerator::large_rank(r, m)))
}

/// Diversity weighting with power `r` restricted to ranks `m+1..=n`.
pub fn small_rank_weights(mu: &[f64], r: f64, m: usize) -> Result<WeightVector> {
    check_rank_cut(mu.len(), m)?;
    power_weights(mu, r, Some(PowerGenerator::small_rank(r, m)))
}

/// Output of [`mixed_weights`].
#[derive(Clone, Debug, PartialEq)]
pub struct MixedWeights {
    pub weights: WeightVector,
    pub mixing: Mixing,
}

/// `𝔭·π^{(p+)} + (1−𝔭)·π^{(p−)}` with `𝔭 = G_{p+}/(G_{p+} + G_{p−})`.
pub fn mixed_weights(mu: &[f64], p_plus: f64, p_minus: f64) -> Result<MixedWeights> {
    if !(p_plus > 0.0 && p_plus < 1.0 && p_minus < 0.0) {
        return Err(SptError::Config(format!(
            "mixed requires p_plus in (0,1) and p_minus < 0, got ({p_plus}, {p_minus})"
        )));
    }
    check_open_simplex(mu)?;
    let g = MixedGenerator::new(p_plus, p_minus);
    let mixing = g.mixing(mu)?;
    let plus = dwp_weights(mu, p_plus)?;
    let minus = dwp_weights(mu, p_minus)?;
    let w = plus.iter().zip(minus.iter()).map(|(a, b)| mixing.proportion * a + mixing.complement * b).collect();
    Ok(MixedWeights { weights: WeightVector::from_raw(w), mixing })
}

/// `Γ_i ∝ μ_i^k e^{−μ_i/θ}`.
pub fn gamma_weights(mu: &[f64], k: f64, theta: f64) -> Result<WeightVector> {
    if !(k > 0.0 && theta > 0.0) {
        return Err(SptError::Config(format!("gamma_threshold requires k, theta > 0, got ({k}, {theta})")));
    }
    check_open_simplex(mu)?;
    let mut w: Vec<f64> = mu.iter().map(|&m| k * m.ln() - m / theta).collect();
    normalize_log_weights(&mut w)?;
    Ok(WeightVector::from_raw(w))
}

/// `B_i ∝ μ_i^α (1−μ_i)^β`.
pub fn beta_weights(mu: &[f64], alpha: f64, beta: f64) -> Result<WeightVector> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(SptError::Config(format!("beta_threshold requires alpha, beta > 0, got ({alpha}, {beta})")));
    }
    check_open_simplex(mu)?;
    if mu.len() == 1 {
        return Ok(WeightVector::from_raw(vec![1.0]));
    }
    let mut w: Vec<f64> = mu.iter().map(|&m| alpha * m.ln() + beta * (-m).ln_1p()).collect();
    normalize_log_weights(&mut w)?;
    Ok(WeightVector::from_raw(w))
}

fn power_weights(mu: &[f64], p: f64, g: Option<PowerGenerator>) -> Result<WeightVector> {
    if !p.is_finite() {
        return Err(SptError::Config(format!("power parameter must be finite, got {p}")));
    }
    check_open_simplex(mu)?;
    let g = g.unwrap_or(PowerGenerator::diversity(p));
    let mut out = vec![0.0; mu.len()];
    g.gradient_terms(mu, &mut out)?;
    Ok(WeightVector::from_raw(out))
}

fn check_rank_cut(n: usize, m: usize) -> Result<()> {
    if m == 0 || m >= n {
        return Err(SptError::Config(format!("rank portfolios require 1 <= m < n, got m={m}, n={n}")));
    }
    Ok(())
}
