use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "spt-lab", version, about = "Stochastic portfolio theory experiments")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides SPT_LAB_OUT and the config's out_dir.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Simulate market paths and their regularity diagnostics.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Evaluate an outperformance-horizon calculator.
    #[command(allow_negative_numbers = true)]
    Thresholds(ThresholdsArgs),
    /// Monte Carlo check of relative arbitrage against the market.
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
    /// Threshold-rebalanced backtest on market data.
    #[command(allow_negative_numbers = true)]
    Backtest(BacktestArgs),
    /// Backtests over a grid of TV thresholds and cost rates.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Backtests of the ten reference portfolios with wealth-curve plot data.
    #[command(allow_negative_numbers = true)]
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegimeKind {
    Free,
    Nf,
    Lf,
    Diversity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExecArg {
    Parallel,
    Sequential,
}

impl From<ExecArg> for spt_core::Execution {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::Parallel => spt_core::Execution::Parallel,
            ExecArg::Sequential => spt_core::Execution::Sequential,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct MarketArgs {
    /// Number of assets.
    #[arg(long)]
    pub n: Option<usize>,
    /// Isotropic volatility: σ = sigma·I.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Initial capitalizations, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub caps: Option<Vec<f64>>,
    /// Constant rates of return, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub drift: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeKind>,
    /// No-failure floor of the `nf` regime.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Floor of the `lf` regime.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Rank held above `kappa` by the `lf` regime.
    #[arg(long)]
    pub lf_m: Option<usize>,
    /// Diversity constant of the `diversity` regime.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub substeps: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Market,
    EqualWeight,
    Diversity,
    LargeRank,
    SmallRank,
    Mixed,
    GammaThreshold,
    BetaThreshold,
}

#[derive(Debug, Default, Args)]
pub struct PortfolioArgs {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub p_plus: Option<f64>,
    #[arg(long)]
    pub p_minus: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "parallel")]
    pub exec: ExecArg,
}

#[derive(Debug, Args)]
pub struct ThresholdsArgs {
    /// thm1, fkk, prop2, prop3, prop4 or lf; inferred from the inputs when absent.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Upper bound K on the covariance eigenvalues.
    #[arg(long = "k-cap", alias = "K")]
    pub k_cap: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub p_plus: Option<f64>,
    #[arg(long)]
    pub p_minus: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    #[command(flatten)]
    pub portfolio: PortfolioArgs,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Horizon of the check; defaults to the market horizon.
    #[arg(long = "T", alias = "t")]
    pub t: Option<f64>,
    #[arg(long)]
    pub nominal_eps: Option<f64>,
    #[arg(long)]
    pub nominal_phi: Option<f64>,
    #[arg(long)]
    pub nominal_kappa: Option<f64>,
    #[arg(long)]
    pub nominal_delta: Option<f64>,
    #[arg(long, value_enum, default_value = "parallel")]
    pub exec: ExecArg,
}

#[derive(Debug, Default, Args)]
pub struct BacktestSettings {
    /// Market data CSV; the built-in synthetic panel when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub tv: Option<f64>,
    #[arg(long)]
    pub cost: Option<f64>,
    #[arg(long)]
    pub initial_wealth: Option<f64>,
    #[arg(long)]
    pub years: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub portfolio: PortfolioArgs,
    #[command(flatten)]
    pub settings: BacktestSettings,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub portfolio: PortfolioArgs,
    #[command(flatten)]
    pub settings: BacktestSettings,
    /// `tv=a,b,...` or `cost=a,b,...`; repeatable.
    #[arg(long)]
    pub grid: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Market data CSV; the built-in synthetic panel when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub cost: Option<f64>,
    #[arg(long)]
    pub initial_wealth: Option<f64>,
    #[arg(long)]
    pub years: Option<f64>,
}
