use std::path::Path;

use serde::Serialize;
use spt_core::analytics::{
    horizon_fkk_positive, horizon_prop2, horizon_prop3, horizon_prop4, horizon_thm1, lf_from_diversity,
    verify_simulated, Constants, HorizonBound, SmallStockCase,
};
use spt_core::backtest::{
    load_market_data, run_backtest, synthetic_dataset, BacktestConfig, BacktestOutcome, MarketDataSet, MetricsReport,
};
use spt_core::market::{check_conditions, simulate_paths_with, ConditionReport, Regime};
use spt_core::par::try_map_indices;
use spt_core::portfolio::PortfolioSpec;
use spt_core::Execution;

use crate::args::{
    BacktestArgs, BacktestSettings, Cli, Command, Family, MarketArgs, PortfolioArgs, RegimeKind, ReportArgs,
    SimulateArgs, SweepArgs, ThresholdsArgs, VerifyArgs,
};
use crate::config::{
    BacktestSection, MarketConfig, RegimeConfig, RunConfig, SimulateConfig, SweepConfig, ThresholdsConfig, VerifyConfig,
};
use crate::output::{emit_plot_data, resolve_out_dir, Artifacts};
use crate::Invalid;

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

pub fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out_dir = resolve_out_dir(cli.out.as_deref(), cfg.out_dir.as_deref());
    cfg.out_dir = None;
    match cli.command {
        Command::Simulate(a) => simulate(cfg, a, out_dir.as_path()),
        Command::Thresholds(a) => thresholds(cfg, a, out_dir.as_path()),
        Command::Verify(a) => verify(cfg, a, out_dir.as_path()),
        Command::Backtest(a) => backtest(cfg, a, out_dir.as_path()),
        Command::Sweep(a) => sweep(cfg, a, out_dir.as_path()),
        Command::Report(a) => report(cfg, a, out_dir.as_path()),
    }
}

fn merge_market(base: Option<MarketConfig>, a: &MarketArgs) -> anyhow::Result<MarketConfig> {
    let n = a.n.or(a.caps.as_ref().map(Vec::len)).or(base.as_ref().map(|m| m.n));
    let Some(n) = n else {
        return Err(invalid("market needs --n (or a [market] section)"));
    };
    let mut m = base.unwrap_or(MarketConfig {
        n,
        sigma: None,
        volatility: None,
        drift: None,
        initial_caps: None,
        step: 1e-3,
        horizon: 1.0,
        regime: RegimeConfig::Free,
        noise_substeps: 1,
    });
    m.n = n;
    if let Some(s) = a.sigma {
        m.sigma = Some(s);
        m.volatility = None;
    }
    if m.sigma.is_none() && m.volatility.is_none() {
        m.sigma = Some(0.2);
    }
    if let Some(c) = &a.caps {
        m.initial_caps = Some(c.clone());
    }
    if let Some(d) = &a.drift {
        m.drift = Some(d.clone());
    }
    if let Some(x) = a.step {
        m.step = x;
    }
    if let Some(x) = a.horizon {
        m.horizon = x;
    }
    if let Some(k) = a.substeps {
        m.noise_substeps = k;
    }
    let kind = a.regime.or(if a.phi.is_some() {
        Some(RegimeKind::Nf)
    } else if a.kappa.is_some() || a.lf_m.is_some() {
        Some(RegimeKind::Lf)
    } else if a.delta.is_some() {
        Some(RegimeKind::Diversity)
    } else {
        None
    });
    let need = |x: Option<f64>, flag: &str| x.ok_or_else(|| invalid(format!("this regime needs --{flag}")));
    match kind {
        None => {}
        Some(RegimeKind::Free) => m.regime = RegimeConfig::Free,
        Some(RegimeKind::Nf) => m.regime = RegimeConfig::ReflectNf { phi: need(a.phi, "phi")? },
        Some(RegimeKind::Lf) => {
            let mm = a.lf_m.ok_or_else(|| invalid("the lf regime needs --lf-m"))?;
            m.regime = RegimeConfig::ReflectLf { m: mm, kappa: need(a.kappa, "kappa")? };
        }
        Some(RegimeKind::Diversity) => m.regime = RegimeConfig::ReflectDiversity { delta: need(a.delta, "delta")? },
    }
    m.spec()?;
    Ok(m)
}

fn merge_portfolio(base: Option<PortfolioSpec>, a: &PortfolioArgs) -> anyhow::Result<PortfolioSpec> {
    let need = |x: Option<f64>, flag: &str| x.ok_or_else(|| invalid(format!("this family needs --{flag}")));
    let spec = match a.family {
        Some(f) => match f {
            Family::Market => PortfolioSpec::Market,
            Family::EqualWeight => PortfolioSpec::EqualWeight,
            Family::Diversity => PortfolioSpec::Diversity { p: need(a.p, "p")? },
            Family::LargeRank => {
                PortfolioSpec::LargeRank { r: need(a.r, "r")?, m: a.m.ok_or_else(|| invalid("large_rank needs --m"))? }
            }
            Family::SmallRank => {
                PortfolioSpec::SmallRank { r: need(a.r, "r")?, m: a.m.ok_or_else(|| invalid("small_rank needs --m"))? }
            }
            Family::Mixed => {
                PortfolioSpec::Mixed { p_plus: need(a.p_plus, "p-plus")?, p_minus: need(a.p_minus, "p-minus")? }
            }
            Family::GammaThreshold => {
                PortfolioSpec::GammaThreshold { k: need(a.k, "k")?, theta: need(a.theta, "theta")? }
            }
            Family::BetaThreshold => {
                PortfolioSpec::BetaThreshold { alpha: need(a.alpha, "alpha")?, beta: need(a.beta, "beta")? }
            }
        },
        None => {
            let Some(mut s) = base else {
                return Err(invalid("no portfolio: pass --family or add a [portfolio] section"));
            };
            match &mut s {
                PortfolioSpec::Diversity { p } => *p = a.p.unwrap_or(*p),
                PortfolioSpec::LargeRank { r, m } | PortfolioSpec::SmallRank { r, m } => {
                    *r = a.r.unwrap_or(*r);
                    *m = a.m.unwrap_or(*m);
                }
                PortfolioSpec::Mixed { p_plus, p_minus } => {
                    *p_plus = a.p_plus.unwrap_or(*p_plus);
                    *p_minus = a.p_minus.unwrap_or(*p_minus);
                }
                PortfolioSpec::GammaThreshold { k, theta } => {
                    *k = a.k.unwrap_or(*k);
                    *theta = a.theta.unwrap_or(*theta);
                }
                PortfolioSpec::BetaThreshold { alpha, beta } => {
                    *alpha = a.alpha.unwrap_or(*alpha);
                    *beta = a.beta.unwrap_or(*beta);
                }
                PortfolioSpec::Market | PortfolioSpec::EqualWeight => {}
            }
            s
        }
    };
    spec.validate_params()?;
    Ok(spec)
}

fn merge_backtest(base: Option<BacktestSection>, a: &BacktestSettings) -> BacktestSection {
    let mut b = base.unwrap_or_default();
    if a.data.is_some() {
        b.data = a.data.clone();
    }
    b.tv_threshold = a.tv.or(b.tv_threshold);
    b.cost_rate = a.cost.or(b.cost_rate);
    b.initial_wealth = a.initial_wealth.or(b.initial_wealth);
    b.years = a.years.or(b.years);
    b
}

fn load_data(section: &BacktestSection) -> anyhow::Result<MarketDataSet> {
    match &section.data {
        Some(p) if !p.is_file() => Err(invalid(format!("data file {} does not exist", p.display()))),
        Some(p) => Ok(load_market_data(p)?),
        None => Ok(synthetic_dataset()?),
    }
}

/// Writes the effective configuration next to the other outputs.
fn artifacts(out_dir: &Path, command: &str, cfg: &RunConfig) -> anyhow::Result<Artifacts> {
    let text = cfg.to_toml();
    let mut a = Artifacts::new(out_dir.to_path_buf(), command, &text)?;
    a.write("config", "toml", |w| Ok(w.write_all(text.as_bytes())?))?;
    Ok(a)
}

fn finish(a: &Artifacts) {
    for p in &a.written {
        eprintln!("wrote {}", p.display());
    }
}

fn simulate(mut cfg: RunConfig, a: SimulateArgs, out_dir: &Path) -> anyhow::Result<()> {
    let market = merge_market(cfg.market.take(), &a.market)?;
    let base = cfg.simulate.take().unwrap_or_default();
    let sim = SimulateConfig { n_paths: a.paths.or(base.n_paths).or(Some(1)), seed: a.seed.or(base.seed).or(Some(0)) };
    let (n_paths, seed) = (sim.n_paths.unwrap_or(1), sim.seed.unwrap_or(0));
    if n_paths == 0 {
        return Err(invalid("--paths must be positive"));
    }
    let spec = market.spec()?;
    let lf_m = match spec.regime {
        Regime::ReflectLf { m, .. } => m,
        _ => 1,
    };
    let eff = RunConfig { market: Some(market), simulate: Some(sim), ..Default::default() };
    let mut art = artifacts(out_dir, "simulate", &eff)?;
    let paths = simulate_paths_with(a.exec.into(), &spec, n_paths, seed)?;
    art.write("", "csv", |w| {
        writeln!(w, "path,t,asset_id,cap,weight")?;
        for (k, p) in paths.iter().enumerate() {
            for (t, time) in p.times.iter().enumerate() {
                for (i, (c, x)) in p.caps.row(t).iter().zip(p.weights.row(t)).enumerate() {
                    writeln!(w, "{k},{time},{i},{c},{x}")?;
                }
            }
        }
        Ok(())
    })?;
    let reports: Vec<ConditionReport> = paths.iter().map(|p| check_conditions(p, lf_m)).collect::<Result<_, _>>()?;
    art.write_json("conditions", &reports)?;
    println!("simulated {n_paths} paths of {} steps (seed {seed})", spec.n_steps());
    finish(&art);
    Ok(())
}

fn threshold_kind(t: &ThresholdsConfig) -> anyhow::Result<&'static str> {
    if let Some(k) = &t.kind {
        return match k.as_str() {
            "thm1" => Ok("thm1"),
            "fkk" => Ok("fkk"),
            "prop2" => Ok("prop2"),
            "prop3" => Ok("prop3"),
            "prop4" => Ok("prop4"),
            "lf" => Ok("lf"),
            other => Err(invalid(format!("unknown threshold kind `{other}`"))),
        };
    }
    Ok(match t {
        ThresholdsConfig { p_plus: Some(_), p_minus: Some(_), k_cap: Some(_), .. } => "prop3",
        ThresholdsConfig { p_plus: Some(_), p_minus: Some(_), .. } => "prop4",
        ThresholdsConfig { r: Some(_), .. } => "prop2",
        ThresholdsConfig { p: Some(p), .. } if *p > 0.0 => "fkk",
        ThresholdsConfig { p: Some(_), .. } => "thm1",
        ThresholdsConfig { delta: Some(_), .. } => "lf",
        _ => return Err(invalid("cannot infer the calculator; pass --kind")),
    })
}

#[derive(Serialize)]
struct LfParameters {
    m: usize,
    kappa: f64,
}

fn thresholds(mut cfg: RunConfig, a: ThresholdsArgs, out_dir: &Path) -> anyhow::Result<()> {
    let b = cfg.thresholds.take().unwrap_or_default();
    let t = ThresholdsConfig {
        kind: a.kind.or(b.kind),
        n: a.n.or(b.n),
        phi: a.phi.or(b.phi),
        kappa: a.kappa.or(b.kappa),
        delta: a.delta.or(b.delta),
        eps: a.eps.or(b.eps),
        k_cap: a.k_cap.or(b.k_cap),
        p: a.p.or(b.p),
        r: a.r.or(b.r),
        m: a.m.or(b.m),
        p_plus: a.p_plus.or(b.p_plus),
        p_minus: a.p_minus.or(b.p_minus),
    };
    let kind = threshold_kind(&t)?;
    let f = |x: Option<f64>, name: &str| x.ok_or_else(|| invalid(format!("{kind} needs --{name}")));
    let n = t.n.ok_or_else(|| invalid(format!("{kind} needs --n")))?;
    let eff = RunConfig { thresholds: Some(t.clone()), ..Default::default() };
    let mut art = artifacts(out_dir, "thresholds", &eff)?;
    if kind == "lf" {
        let (m, kappa) = lf_from_diversity(n, f(t.delta, "delta")?)?;
        println!("m = {m}\nkappa = {kappa}");
        art.write_json("", &LfParameters { m, kappa })?;
        finish(&art);
        return Ok(());
    }
    let eps = f(t.eps, "eps")?;
    let bound: HorizonBound = match kind {
        "thm1" => horizon_thm1(n, f(t.phi, "phi")?, eps, f(t.p, "p")?),
        "fkk" => horizon_fkk_positive(n, eps, f(t.delta, "delta")?, f(t.p, "p")?),
        "prop2" => {
            let r = f(t.r, "r")?;
            let m = t.m.ok_or_else(|| invalid("prop2 needs --m"))?;
            if r < 0.0 {
                horizon_prop2(SmallStockCase::SmallStockNeg, n, m, f(t.phi, "phi")?, eps, r)
            } else {
                horizon_prop2(SmallStockCase::SmallStockPos, n, m, f(t.kappa, "kappa")?, eps, r)
            }
        }
        "prop3" => horizon_prop3(
            n,
            f(t.phi, "phi")?,
            eps,
            f(t.k_cap, "k-cap")?,
            f(t.p_plus, "p-plus")?,
            f(t.p_minus, "p-minus")?,
        ),
        _ => horizon_prop4(n, f(t.delta, "delta")?, eps, f(t.p_plus, "p-plus")?, f(t.p_minus, "p-minus")?),
    };
    let r = &bound.parameter_range;
    println!("threshold_T = {}", bound.threshold_t);
    println!("valid = {}", bound.valid);
    println!("{} range = ({}, {})", r.name, r.lo, r.hi);
    for o in &bound.other_ranges {
        println!("{} range = ({}, {})", o.name, o.lo, o.hi);
    }
    for note in &bound.notes {
        println!("note: {note}");
    }
    art.write_json("", &bound)?;
    finish(&art);
    Ok(())
}

fn verify(mut cfg: RunConfig, a: VerifyArgs, out_dir: &Path) -> anyhow::Result<()> {
    let market = merge_market(cfg.market.take(), &a.market)?;
    let portfolio = merge_portfolio(cfg.portfolio.take(), &a.portfolio)?;
    let b = cfg.verify.take().unwrap_or_default();
    let v = VerifyConfig {
        n_paths: a.paths.or(b.n_paths).or(Some(100)),
        seed: a.seed.or(b.seed).or(Some(0)),
        t: a.t.or(b.t).or(Some(market.horizon)),
        eps: a.nominal_eps.or(b.eps),
        phi: a.nominal_phi.or(b.phi),
        kappa: a.nominal_kappa.or(b.kappa),
        delta: a.nominal_delta.or(b.delta),
    };
    let spec = market.spec()?;
    portfolio.validate(spec.n_assets)?;
    let n_paths = v.n_paths.unwrap_or(100);
    if n_paths == 0 {
        return Err(invalid("--paths must be positive"));
    }
    let t = v.t.unwrap_or(market.horizon);
    if !(t > 0.0 && t <= market.horizon + 1e-9) {
        return Err(invalid(format!("T = {t} must lie in (0, horizon = {}]", market.horizon)));
    }
    let nominal =
        Constants { eps: v.eps, phi: v.phi, kappa: v.kappa, delta: v.delta }.or(market.nominal_constants(&portfolio)?);
    let eff =
        RunConfig { market: Some(market), portfolio: Some(portfolio), verify: Some(v.clone()), ..Default::default() };
    let mut art = artifacts(out_dir, "verify", &eff)?;
    let rep = verify_simulated(&spec, n_paths, v.seed.unwrap_or(0), &portfolio, t, nominal, a.exec.into())?;
    println!("portfolio = {}", portfolio.label());
    println!("fraction_outperforming = {}", rep.fraction_outperforming);
    println!("min_log_rel_wealth = {}", rep.min_log_rel_wealth);
    if let Some(b) = rep.nominal_bound.or(rep.theoretical_bound) {
        println!("bound = {b}");
    }
    if let Some(th) = &rep.threshold {
        println!("threshold_T = {} (valid = {})", th.threshold_t, th.valid);
    }
    match rep.claim {
        Some(c) => println!("claim holds = {c}"),
        None => println!("no claim at this horizon"),
    }
    art.write_json("", &rep)?;
    finish(&art);
    Ok(())
}

fn backtest(mut cfg: RunConfig, a: BacktestArgs, out_dir: &Path) -> anyhow::Result<()> {
    let portfolio = merge_portfolio(cfg.portfolio.take(), &a.portfolio)?;
    let section = merge_backtest(cfg.backtest.take(), &a.settings);
    let bc = section.config(portfolio)?;
    let data = load_data(&section)?;
    let eff = RunConfig { portfolio: Some(portfolio), backtest: Some(section), ..Default::default() };
    let mut art = artifacts(out_dir, "backtest", &eff)?;
    let o = run_backtest(&data, &bc)?;
    art.write("ledger", "csv", |w| Ok(o.ledger.write_csv(w)?))?;
    art.write_json("metrics", &o.metrics)?;
    let mut runs = vec![(PortfolioSpec::Market.label(), &o.market_ledger)];
    if portfolio != PortfolioSpec::Market {
        runs.push((portfolio.label(), &o.ledger));
    }
    art.write("plot", "csv", |w| emit_plot_data(w, &runs))?;
    print_metrics(&portfolio.label(), &o);
    finish(&art);
    Ok(())
}

fn print_metrics(label: &str, o: &BacktestOutcome) {
    let m = &o.metrics;
    let show = |x: Option<f64>| x.map_or("undefined".to_string(), |v| v.to_string());
    println!(
        "{label}: final_wealth = {} trades = {} market_rr = {}% sharpe = {} gamma_tilde = {}{}",
        o.ledger.final_wealth(),
        o.ledger.n_trades(),
        m.market_rr,
        show(m.sharpe),
        show(m.gamma_tilde),
        if o.ledger.partial { " (partial: every asset delisted)" } else { "" }
    );
}

fn parse_grid(specs: &[String], base: SweepConfig) -> anyhow::Result<SweepConfig> {
    let mut g = base;
    for s in specs {
        let (key, values) = s.split_once('=').ok_or_else(|| invalid(format!("grid `{s}` is not key=v1,v2,...")))?;
        let vals: Vec<f64> = values
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| invalid(format!("bad grid value `{v}` in `{s}`"))))
            .collect::<anyhow::Result<_>>()?;
        match key.trim() {
            "tv" => g.tv = vals,
            "cost" => g.cost = vals,
            other => return Err(invalid(format!("unknown grid key `{other}` (expected tv or cost)"))),
        }
    }
    Ok(g)
}

#[derive(Serialize)]
struct SweepCell {
    cell: usize,
    config: BacktestConfig,
    final_wealth: f64,
    n_trades: usize,
    metrics: MetricsReport,
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

fn sweep(mut cfg: RunConfig, a: SweepArgs, out_dir: &Path) -> anyhow::Result<()> {
    let portfolio = merge_portfolio(cfg.portfolio.take(), &a.portfolio)?;
    let section = merge_backtest(cfg.backtest.take(), &a.settings);
    let base = section.config(portfolio)?;
    let mut grid = parse_grid(&a.grid, cfg.sweep.take().unwrap_or_default())?;
    if grid.tv.is_empty() {
        grid.tv = vec![base.tv_threshold];
    }
    if grid.cost.is_empty() {
        grid.cost = vec![base.cost_rate];
    }
    let cells: Vec<BacktestConfig> = grid
        .tv
        .iter()
        .flat_map(|&tv| grid.cost.iter().map(move |&c| BacktestConfig { tv_threshold: tv, cost_rate: c, ..base }))
        .collect();
    for c in &cells {
        c.validate()?;
    }
    let data = load_data(&section)?;
    let eff =
        RunConfig { portfolio: Some(portfolio), backtest: Some(section), sweep: Some(grid), ..Default::default() };
    let mut art = artifacts(out_dir, "sweep", &eff)?;
    let results = try_map_indices(Execution::Parallel, cells.len(), |k| {
        let o = run_backtest(&data, &cells[k])?;
        Ok(SweepCell {
            cell: k,
            config: cells[k],
            final_wealth: o.ledger.final_wealth(),
            n_trades: o.ledger.n_trades(),
            metrics: o.metrics,
        })
    })?;
    for r in &results {
        art.write_json(&format!("cell-{:04}", r.cell), r)?;
    }
    art.write("index", "csv", |w| {
        writeln!(w, "cell,tv_threshold,cost_rate,final_wealth,n_trades,market_rr,sharpe,gamma_tilde")?;
        for r in &results {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.cell,
                r.config.tv_threshold,
                r.config.cost_rate,
                r.final_wealth,
                r.n_trades,
                r.metrics.market_rr,
                opt(r.metrics.sharpe),
                opt(r.metrics.gamma_tilde)
            )?;
        }
        Ok(())
    })?;
    // ties keep the earliest cell
    let best = results.iter().fold(&results[0], |b, r| if r.final_wealth > b.final_wealth { r } else { b });
    println!(
        "best cell {}: tv = {} cost = {} final_wealth = {} market_rr = {}%",
        best.cell, best.config.tv_threshold, best.config.cost_rate, best.final_wealth, best.metrics.market_rr
    );
    finish(&art);
    Ok(())
}

/// The ten reference portfolios with their TV thresholds; rank cuts are
/// given for a 500-asset universe.
pub fn reference_portfolios() -> [(PortfolioSpec, Option<f64>); 10] {
    [
        (PortfolioSpec::Market, None),
        (PortfolioSpec::EqualWeight, Some(0.0005)),
        (PortfolioSpec::Diversity { p: 0.5 }, Some(0.0022)),
        (PortfolioSpec::Diversity { p: -0.5 }, Some(0.0015)),
        (PortfolioSpec::LargeRank { r: -0.5, m: 470 }, Some(0.0025)),
        (PortfolioSpec::SmallRank { r: 0.5, m: 30 }, Some(0.0001)),
        (PortfolioSpec::SmallRank { r: -0.5, m: 30 }, Some(0.0100)),
        (PortfolioSpec::Mixed { p_plus: 0.5, p_minus: -0.5 }, Some(0.0022)),
        (PortfolioSpec::GammaThreshold { k: 0.65, theta: 1e-4 }, Some(0.0020)),
        (PortfolioSpec::BetaThreshold { alpha: 1e-4, beta: 2.0 }, Some(0.0002)),
    ]
}

/// Rescales a rank cut `m` from 500 assets to `n`, keeping it in `1..n`.
pub fn scale_rank(m: usize, n: usize) -> usize {
    ((m as f64 * n as f64 / 500.0).round() as usize).clamp(1, n.saturating_sub(1).max(1))
}

fn scaled(p: PortfolioSpec, n: usize) -> PortfolioSpec {
    match p {
        PortfolioSpec::LargeRank { r, m } => PortfolioSpec::LargeRank { r, m: scale_rank(m, n) },
        PortfolioSpec::SmallRank { r, m } => PortfolioSpec::SmallRank { r, m: scale_rank(m, n) },
        other => other,
    }
}

#[derive(Serialize)]
struct ReportRow {
    portfolio: PortfolioSpec,
    label: String,
    tv_threshold: Option<f64>,
    final_wealth: f64,
    n_trades: usize,
    metrics: MetricsReport,
}

fn report(mut cfg: RunConfig, a: ReportArgs, out_dir: &Path) -> anyhow::Result<()> {
    let settings =
        BacktestSettings { data: a.data, tv: None, cost: a.cost, initial_wealth: a.initial_wealth, years: a.years };
    let mut section = merge_backtest(cfg.backtest.take(), &settings);
    section.tv_threshold = None;
    let data = load_data(&section)?;
    let n = data.n_assets();
    let runs: Vec<(PortfolioSpec, BacktestConfig)> = reference_portfolios()
        .iter()
        .map(|&(p, tv)| {
            let p = scaled(p, n);
            section.config(p).map(|c| (p, c.with_tv_threshold(tv.unwrap_or(0.0))))
        })
        .collect::<anyhow::Result<_>>()?;
    let eff = RunConfig { backtest: Some(section), ..Default::default() };
    let mut art = artifacts(out_dir, "report", &eff)?;
    let outcomes = try_map_indices(Execution::Parallel, runs.len(), |k| run_backtest(&data, &runs[k].1))?;
    let rows: Vec<ReportRow> = runs
        .iter()
        .zip(&outcomes)
        .zip(reference_portfolios())
        .map(|(((p, _), o), (_, tv))| ReportRow {
            portfolio: *p,
            label: p.label(),
            tv_threshold: tv,
            final_wealth: o.ledger.final_wealth(),
            n_trades: o.ledger.n_trades(),
            metrics: o.metrics.clone(),
        })
        .collect();
    let series: Vec<(String, &spt_core::backtest::Ledger)> =
        runs.iter().zip(&outcomes).map(|((p, _), o)| (p.label(), &o.ledger)).collect();
    art.write("plot", "csv", |w| emit_plot_data(w, &series))?;
    art.write_json("", &rows)?;
    art.write("table", "csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["portfolio", "tv_threshold", "market_rr", "sharpe", "gamma_tilde"])?;
        for r in &rows {
            let m = &r.metrics;
            out.write_record([
                r.label.clone(),
                opt(r.tv_threshold),
                m.market_rr.to_string(),
                opt(m.sharpe),
                opt(m.gamma_tilde),
            ])?;
        }
        out.flush()?;
        Ok(())
    })?;
    for (r, o) in rows.iter().zip(&outcomes) {
        print_metrics(&r.label, o);
    }
    finish(&art);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_cuts_scale_to_universe() {
        assert_eq!(scale_rank(470, 500), 470);
        assert_eq!(scale_rank(470, 10), 9);
        assert_eq!(scale_rank(30, 10), 1);
        assert_eq!(scale_rank(30, 100), 6);
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid(&["tv=0.001,0.002".into(), "cost=0".into()], SweepConfig::default()).unwrap();
        assert_eq!((g.tv, g.cost), (vec![0.001, 0.002], vec![0.0]));
        assert!(parse_grid(&["speed=1".into()], SweepConfig::default()).is_err());
        assert!(parse_grid(&["tv=x".into()], SweepConfig::default()).is_err());
    }

    #[test]
    fn threshold_kind_inference() {
        let t = ThresholdsConfig { n: Some(2), phi: Some(0.2), eps: Some(0.04), p: Some(-0.5), ..Default::default() };
        assert_eq!(threshold_kind(&t).unwrap(), "thm1");
        let t = ThresholdsConfig { p_plus: Some(0.5), p_minus: Some(-0.5), delta: Some(0.1), ..Default::default() };
        assert_eq!(threshold_kind(&t).unwrap(), "prop4");
        assert!(threshold_kind(&ThresholdsConfig::default()).is_err());
    }

    #[test]
    fn ten_reference_labels_are_distinct() {
        let mut labels: Vec<String> = reference_portfolios().iter().map(|(p, _)| scaled(*p, 10).label()).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 10);
    }
}
