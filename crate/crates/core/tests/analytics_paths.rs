use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use spt_core::analytics::*;
use spt_core::market::*;
use spt_core::portfolio::PortfolioSpec;
use spt_core::Execution;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Median |residual| at each step size, on Brownian paths shared across grids.
fn coupled_residuals(p: f64, steps: &[f64], n_paths: u64, seed: u64) -> Vec<f64> {
    let finest = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let base = MarketSpec::isotropic(vec![0.0; 3], 0.2, vec![1.0, 2.0, 3.0], finest, 1.0).unwrap();
    let port = PortfolioSpec::Diversity { p };
    steps
        .iter()
        .map(|&h| {
            let k = (h / finest).round() as usize;
            let spec = base.clone().with_step(h).unwrap().with_noise_substeps(k).unwrap();
            median(
                (0..n_paths)
                    .map(|i| {
                        let path = simulate_path(&spec, seed, i).unwrap();
                        master_decomposition(&path, &port, None).unwrap().residual.abs()
                    })
                    .collect(),
            )
        })
        .collect()
}

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn diversity_residual_converges_at_half_order() {
    let steps = [4e-3, 2e-3, 1e-3, 5e-4];
    for p in [0.5, -0.5] {
        let med = coupled_residuals(p, &steps, 200, 0);
        let order = loglog_slope(&steps, &med);
        assert!(order >= 0.5, "p={p}: order {order}, medians {med:?}");
        assert!(med[2] < 1e-2);
    }
}

fn brownian_gap_path(seed: u64, index: u64, h: f64, n_steps: usize) -> MarketPath {
    let mut rng = path_rng(seed, index);
    let mut caps = Series::new(2);
    let mut w = 0.0f64;
    caps.push(&[1.0, 1.0]);
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        w += z * h.sqrt();
        caps.push(&[w.exp(), 1.0]);
    }
    let times = (0..=n_steps).map(|t| t as f64 * h).collect();
    MarketPath::from_caps(times, caps, CovSeries::Constant(DMatrix::zeros(2, 2))).unwrap()
}

#[test]
fn local_time_of_reflected_brownian_motion() {
    let (h, n_paths) = (1e-4, 400);
    let l: Vec<f64> = (0..n_paths)
        .map(|i| {
            *local_time(&brownian_gap_path(11, i, h, 10_000), 1, default_bandwidth(h))
                .unwrap()
                .local_time
                .last()
                .unwrap()
        })
        .collect();
    let mean = l.iter().sum::<f64>() / n_paths as f64;
    let sd = (l.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n_paths as f64 - 1.0)).sqrt();
    let want = (2.0 / std::f64::consts::PI).sqrt();
    assert!((mean - want).abs() < 4.0 * sd / (n_paths as f64).sqrt(), "{mean} vs {want}");
}

#[test]
fn local_time_zero_without_near_ties() {
    let spec = MarketSpec::isotropic(vec![0.0; 3], 0.05, vec![10.0, 3.0, 1.0], 1e-3, 1.0).unwrap();
    let path = simulate_path(&spec, 2, 0).unwrap();
    for k in 1..3 {
        let lt = local_time(&path, k, default_bandwidth(1e-3)).unwrap();
        assert!(lt.local_time.iter().all(|&x| x == 0.0));
        assert!(lt.gap_process.iter().all(|&g| g > 0.5));
    }
}

#[test]
fn small_rank_leakage_matches_implied_leakage() {
    for (n, m, r) in [(2, 1, -0.5), (3, 1, -0.5), (3, 2, 0.5)] {
        let spec = MarketSpec::isotropic(vec![0.0; n], 0.3, vec![1.0; n], 1e-4, 1.0).unwrap();
        let port = PortfolioSpec::SmallRank { r, m };
        let (mut est, mut implied) = (0.0, 0.0);
        for i in 0..48 {
            let path = simulate_path(&spec, 0, i).unwrap();
            let d = master_decomposition(&path, &port, None).unwrap();
            assert!(d.leakage > 0.0);
            est += d.leakage;
            implied += d.log_rel_wealth - d.log_g_change - d.drift_integral;
        }
        let rel = (est - implied).abs() / implied;
        assert!(rel < 0.1, "n={n} m={m} r={r}: estimator {est}, implied {implied}");
    }
}

#[test]
fn large_rank_decomposition_is_descriptive() {
    let spec = MarketSpec::isotropic(vec![0.0; 3], 0.3, vec![1.0; 3], 1e-3, 1.0).unwrap();
    let path = simulate_path(&spec, 4, 0).unwrap();
    let d = master_decomposition(&path, &PortfolioSpec::LargeRank { r: 0.5, m: 1 }, None).unwrap();
    assert!(d.leakage < 0.0 && d.residual.is_finite());
    let j = serde_json::to_value(&d).unwrap();
    for key in ["log_rel_wealth", "log_g_change", "drift_integral", "leakage", "residual"] {
        assert!(j.get(key).is_some(), "{key}");
    }
}

#[test]
fn verification_json_keys_and_parallel_agreement() {
    let spec = MarketSpec::isotropic(vec![0.0; 3], 0.2, vec![1.0, 1.0, 1.0], 1e-2, 2.0)
        .unwrap()
        .with_regime(Regime::ReflectNf { phi: 0.1 })
        .unwrap();
    let port = PortfolioSpec::Mixed { p_plus: 0.5, p_minus: -0.5 };
    let a = verify_simulated(&spec, 6, 3, &port, 2.0, Constants::default(), Execution::Sequential).unwrap();
    let b = verify_simulated(&spec, 6, 3, &port, 2.0, Constants::default(), Execution::Parallel).unwrap();
    assert_eq!(a, b);
    let j = serde_json::to_value(&a).unwrap();
    for key in ["fraction_outperforming", "min_log_rel_wealth", "theoretical_bound"] {
        assert!(j.get(key).is_some(), "{key}");
    }
    for o in &a.per_path {
        assert!(o.log_rel_wealth > o.bound.unwrap() - 0.01);
    }
}
