use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use spt_core::analytics::Constants;
use spt_core::backtest::BacktestConfig;
use spt_core::market::{eigen_range, Drift, MarketSpec, Regime, Volatility};
use spt_core::portfolio::PortfolioSpec;

use crate::Invalid;

/// Every section a command may read; absent sections fall back to flags or
/// defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub portfolio: Option<PortfolioSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backtest: Option<BacktestSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        if !path.is_file() {
            return Err(Invalid(format!("config file {} does not exist", path.display())).into());
        }
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| Invalid(format!("invalid config: {e}")).into())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config values are representable in TOML")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegimeConfig {
    #[default]
    Free,
    ReflectNf {
        phi: f64,
    },
    ReflectLf {
        m: usize,
        kappa: f64,
    },
    ReflectDiversity {
        delta: f64,
    },
}

impl From<RegimeConfig> for Regime {
    fn from(r: RegimeConfig) -> Regime {
        match r {
            RegimeConfig::Free => Regime::Free,
            RegimeConfig::ReflectNf { phi } => Regime::ReflectNf { phi },
            RegimeConfig::ReflectLf { m, kappa } => Regime::ReflectLf { m, kappa },
            RegimeConfig::ReflectDiversity { delta } => Regime::ReflectDiversity { delta },
        }
    }
}

/// Constant-coefficient market; `sigma` gives `σ = sigma·I`, otherwise
/// `volatility` holds the rows of the n×d matrix `σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volatility: Option<Vec<Vec<f64>>>,
    /// Defaults to zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    /// Defaults to all ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_caps: Option<Vec<f64>>,
    pub step: f64,
    pub horizon: f64,
    #[serde(default)]
    pub regime: RegimeConfig,
    #[serde(default = "one")]
    pub noise_substeps: usize,
}

fn one() -> usize {
    1
}

impl MarketConfig {
    pub fn spec(&self) -> anyhow::Result<MarketSpec> {
        let n = self.n;
        let sigma = match (&self.sigma, &self.volatility) {
            (Some(s), None) => DMatrix::identity(n, n) * *s,
            (None, Some(rows)) => {
                let d = rows.first().map_or(0, Vec::len);
                if rows.len() != n || rows.iter().any(|r| r.len() != d) {
                    return Err(Invalid(format!("volatility must be {n} rows of equal length")).into());
                }
                DMatrix::from_fn(n, d, |i, j| rows[i][j])
            }
            _ => return Err(Invalid("market needs exactly one of `sigma` or `volatility`".into()).into()),
        };
        let spec = MarketSpec {
            n_assets: n,
            n_drivers: sigma.ncols(),
            drift: Drift::Constant(self.drift.clone().unwrap_or_else(|| vec![0.0; n])),
            volatility: Volatility::Constant(sigma),
            initial_caps: self.initial_caps.clone().unwrap_or_else(|| vec![1.0; n]),
            step: self.step,
            horizon: self.horizon,
            regime: self.regime.into(),
            noise_substeps: self.noise_substeps,
        };
        Ok(spec.validated()?)
    }

    /// Constants the model guarantees: `eps` is the smallest eigenvalue of
    /// `σσ'` and the barrier constant comes from the regime.
    pub fn nominal_constants(&self, portfolio: &PortfolioSpec) -> anyhow::Result<Constants> {
        let spec = self.spec()?;
        let eps = match &spec.volatility {
            Volatility::Constant(s) => Some(eigen_range(&(s * s.transpose()))?.0).filter(|e| *e > 0.0),
            Volatility::Function(_) => None,
        };
        let mut c = Constants { eps, ..Constants::default() };
        match self.regime {
            RegimeConfig::Free => {}
            RegimeConfig::ReflectNf { phi } => c.phi = Some(phi),
            RegimeConfig::ReflectLf { m, kappa } => {
                if let PortfolioSpec::SmallRank { m: pm, .. } = portfolio {
                    if (pm + 2).min(self.n) == m {
                        c.kappa = Some(kappa);
                    }
                }
            }
            RegimeConfig::ReflectDiversity { delta } => c.delta = Some(delta),
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Inputs of the horizon calculators; `kind` is inferred when absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub k_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_minus: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Horizon of the check; defaults to the market horizon.
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Overrides of the model-implied constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestSection {
    /// Market data CSV; the built-in synthetic panel when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_wealth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub years: Option<f64>,
}

impl BacktestSection {
    pub fn config(&self, portfolio: PortfolioSpec) -> anyhow::Result<BacktestConfig> {
        let mut c = BacktestConfig::new(portfolio);
        if let Some(x) = self.tv_threshold {
            c.tv_threshold = x;
        }
        if let Some(x) = self.cost_rate {
            c.cost_rate = x;
        }
        if let Some(x) = self.initial_wealth {
            c.initial_wealth = x;
        }
        c.years = self.years;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tv: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cost: Vec<f64>,
}
