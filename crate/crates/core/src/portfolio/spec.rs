use serde::{Deserialize, Serialize};

use super::generating::{ConstantGenerator, GeneratingFunction, MixedGenerator, PowerGenerator};
use super::rules;
use super::weights::{check_open_simplex, WeightVector};
use crate::error::{Result, SptError};

/// A portfolio family and its parameters.
///
/// Serialized with a `family` tag and flat parameter keys, e.g.
/// `{"family": "small_rank", "r": -0.5, "m": 2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PortfolioSpec {
    Market,
    EqualWeight,
    /// `p = 0` is the equal-weight portfolio.
    Diversity {
        p: f64,
    },
    LargeRank {
        r: f64,
        m: usize,
    },
    SmallRank {
        r: f64,
        m: usize,
    },
    Mixed {
        p_plus: f64,
        p_minus: f64,
    },
    GammaThreshold {
        k: f64,
        theta: f64,
    },
    BetaThreshold {
        alpha: f64,
        beta: f64,
    },
}

impl PortfolioSpec {
    /// Checks parameter ranges that do not depend on the number of assets.
    pub fn validate_params(&self) -> Result<()> {
        let bad = |msg: String| Err(SptError::Config(msg));
        match *self {
            PortfolioSpec::Market | PortfolioSpec::EqualWeight => Ok(()),
            PortfolioSpec::Diversity { p } if !p.is_finite() => bad(format!("diversity p must be finite, got {p}")),
            PortfolioSpec::Diversity { .. } => Ok(()),
            PortfolioSpec::LargeRank { r, m } | PortfolioSpec::SmallRank { r, m } => {
                if !r.is_finite() {
                    bad(format!("rank portfolio r must be finite, got {r}"))
                } else if m == 0 {
                    bad("rank portfolio m must be >= 1".into())
                } else {
                    Ok(())
                }
            }
            PortfolioSpec::Mixed { p_plus, p_minus } => {
                if p_plus > 0.0 && p_plus < 1.0 && p_minus < 0.0 && p_minus.is_finite() {
                    Ok(())
                } else {
                    bad(format!("mixed requires p_plus in (0,1), p_minus < 0; got ({p_plus}, {p_minus})"))
                }
            }
            PortfolioSpec::GammaThreshold { k, theta } => {
                if k > 0.0 && theta > 0.0 && k.is_finite() && theta.is_finite() {
                    Ok(())
                } else {
                    bad(format!("gamma_threshold requires k, theta > 0; got ({k}, {theta})"))
                }
            }
            PortfolioSpec::BetaThreshold { alpha, beta } => {
                if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
                    Ok(())
                } else {
                    bad(format!("beta_threshold requires alpha, beta > 0; got ({alpha}, {beta})"))
                }
            }
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.validate_params()?;
        match *self {
            PortfolioSpec::LargeRank { m, .. } if m > n => {
                Err(SptError::Config(format!("large_rank requires m <= n, got m={m}, n={n}")))
            }
            PortfolioSpec::SmallRank { m, .. } if m >= n => {
                Err(SptError::Config(format!("small_rank requires m < n, got m={m}, n={n}")))
            }
            _ => Ok(()),
        }
    }

    pub fn rank_m(&self) -> Option<usize> {
        match *self {
            PortfolioSpec::LargeRank { m, .. } | PortfolioSpec::SmallRank { m, .. } => Some(m),
            _ => None,
        }
    }

    /// Same family with the rank cut clamped into its legal range for `n`
    /// assets (for universes that shrink below the configured `m`).
    pub fn clamped_to(&self, n: usize) -> Self {
        match *self {
            PortfolioSpec::LargeRank { r, m } => PortfolioSpec::LargeRank { r, m: m.min(n).max(1) },
            PortfolioSpec::SmallRank { r, m } => PortfolioSpec::SmallRank { r, m: m.min(n.saturating_sub(1)).max(1) },
            other => other,
        }
    }

    pub fn is_functionally_generated(&self) -> bool {
        !matches!(self, PortfolioSpec::GammaThreshold { .. } | PortfolioSpec::BetaThreshold { .. })
    }

    pub fn is_rank_based(&self) -> bool {
        self.rank_m().is_some()
    }

    /// The generating function of the family; Γ and B have none.
    pub fn generating_function(&self) -> Result<Box<dyn GeneratingFunction>> {
        self.validate_params()?;
        Ok(match *self {
            PortfolioSpec::Market => Box::new(ConstantGenerator),
            PortfolioSpec::EqualWeight => Box::new(PowerGenerator::diversity(0.0)),
            PortfolioSpec::Diversity { p } => Box::new(PowerGenerator::diversity(p)),
            PortfolioSpec::LargeRank { r, m } => Box::new(PowerGenerator::large_rank(r, m)),
            PortfolioSpec::SmallRank { r, m } => Box::new(PowerGenerator::small_rank(r, m)),
            PortfolioSpec::Mixed { p_plus, p_minus } => Box::new(MixedGenerator::new(p_plus, p_minus)),
            PortfolioSpec::GammaThreshold { .. } | PortfolioSpec::BetaThreshold { .. } => {
                return Err(SptError::Unsupported(format!(
                    "{} is a direct weight rule with no generating function",
                    self.label()
                )))
            }
        })
    }

    pub fn weights(&self, mu: &[f64]) -> Result<WeightVector> {
        let mut out = vec![0.0; mu.len()];
        self.weights_into(mu, &mut out)?;
        Ok(WeightVector::from_raw(out))
    }

    /// Writes the target weights at market weights `mu` into `out`.
    pub fn weights_into(&self, mu: &[f64], out: &mut [f64]) -> Result<()> {
        self.validate(mu.len())?;
        check_open_simplex(mu)?;
        match *self {
            PortfolioSpec::Market => out.copy_from_slice(mu),
            PortfolioSpec::EqualWeight => PowerGenerator::diversity(0.0).gradient_terms(mu, out)?,
            PortfolioSpec::Diversity { p } => PowerGenerator::diversity(p).gradient_terms(mu, out)?,
            PortfolioSpec::LargeRank { r, m } => PowerGenerator::large_rank(r, m).gradient_terms(mu, out)?,
            PortfolioSpec::SmallRank { r, m } => PowerGenerator::small_rank(r, m).gradient_terms(mu, out)?,
            PortfolioSpec::Mixed { p_plus, p_minus } => {
                out.copy_from_slice(&rules::mixed_weights(mu, p_plus, p_minus)?.weights)
            }
            PortfolioSpec::GammaThreshold { k, theta } => out.copy_from_slice(&rules::gamma_weights(mu, k, theta)?),
            PortfolioSpec::BetaThreshold { alpha, beta } => out.copy_from_slice(&rules::beta_weights(mu, alpha, beta)?),
        }
        Ok(())
    }

    /// Series name used in plot data.
    pub fn label(&self) -> String {
        match *self {
            PortfolioSpec::Market => "mu".into(),
            PortfolioSpec::EqualWeight | PortfolioSpec::Diversity { p: 0.0 } => "pi_E".into(),
            PortfolioSpec::Diversity { p } => format!("pi_p(p={p})"),
            PortfolioSpec::LargeRank { r, m } => format!("pi_sharp(r={r},m={m})"),
            PortfolioSpec::SmallRank { r, m } => format!("pi_flat(r={r},m={m})"),
            PortfolioSpec::Mixed { p_plus, p_minus } => format!("pi_hat(p_plus={p_plus},p_minus={p_minus})"),
            PortfolioSpec::GammaThreshold { k, theta } => format!("Gamma(k={k},theta={theta})"),
            PortfolioSpec::BetaThreshold { alpha, beta } => format!("B(alpha={alpha},beta={beta})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_uses_family_tag_and_flat_keys() {
        let s = PortfolioSpec::SmallRank { r: -0.5, m: 2 };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"family":"small_rank","r":-0.5,"m":2}"#);
        assert_eq!(serde_json::from_str::<PortfolioSpec>(&j).unwrap(), s);
        let m: PortfolioSpec = serde_json::from_str(r#"{"family":"market"}"#).unwrap();
        assert_eq!(m, PortfolioSpec::Market);
        assert!(serde_json::from_str::<PortfolioSpec>(r#"{"family":"diversity","q":1}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(PortfolioSpec::SmallRank { r: 0.5, m: 2 }.validate(2).is_err());
        assert!(PortfolioSpec::SmallRank { r: 0.5, m: 1 }.validate(2).is_ok());
        assert!(PortfolioSpec::LargeRank { r: 0.5, m: 2 }.validate(2).is_ok());
        assert!(PortfolioSpec::LargeRank { r: 0.5, m: 3 }.validate(2).is_err());
        assert!(PortfolioSpec::LargeRank { r: 0.5, m: 0 }.validate(5).is_err());
        assert!(PortfolioSpec::Mixed { p_plus: 0.5, p_minus: 0.1 }.validate(3).is_err());
        assert!(PortfolioSpec::GammaThreshold { k: 0.0, theta: 1.0 }.validate(3).is_err());
        assert!(PortfolioSpec::BetaThreshold { alpha: 1.0, beta: -1.0 }.validate(3).is_err());
    }

    #[test]
    fn diversity_zero_is_equal_weight() {
        let mu = [0.6, 0.3, 0.1];
        assert_eq!(
            PortfolioSpec::Diversity { p: 0.0 }.weights(&mu).unwrap(),
            PortfolioSpec::EqualWeight.weights(&mu).unwrap()
        );
        assert_eq!(PortfolioSpec::Diversity { p: 0.0 }.label(), "pi_E");
    }

    #[test]
    fn threshold_rules_have_no_generator() {
        let e = PortfolioSpec::GammaThreshold { k: 0.65, theta: 1e-4 }.generating_function().err().unwrap();
        assert!(matches!(e, SptError::Unsupported(_)));
        assert!(PortfolioSpec::Mixed { p_plus: 0.5, p_minus: -0.5 }.generating_function().is_ok());
    }

    #[test]
    fn clamping() {
        assert_eq!(
            PortfolioSpec::LargeRank { r: -0.5, m: 470 }.clamped_to(10),
            PortfolioSpec::LargeRank { r: -0.5, m: 10 }
        );
        assert_eq!(
            PortfolioSpec::SmallRank { r: -0.5, m: 30 }.clamped_to(10),
            PortfolioSpec::SmallRank { r: -0.5, m: 9 }
        );
        assert_eq!(PortfolioSpec::Market.clamped_to(1), PortfolioSpec::Market);
    }
}
