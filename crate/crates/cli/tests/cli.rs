use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spt-lab"));
    c.env_remove("SPT_LAB_OUT");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn with_suffix(dir: &Path, suffix: &str) -> PathBuf {
    files(dir).into_iter().find(|p| p.to_string_lossy().ends_with(suffix)).unwrap_or_else(|| panic!("no *{suffix}"))
}

const TOY: &str = "date,asset_id,cap,total_return_factor,delisted
2021-03-01,AAA,100,1,0
2021-03-01,BBB,50,1,0
2021-03-01,CCC,20,1,0
2021-03-02,AAA,101,1.01,0
2021-03-02,BBB,49,0.98,0
2021-03-02,CCC,21,1.05,0
2021-03-03,AAA,99,0.980198,0
2021-03-03,BBB,50,1.020408,0
2021-03-03,CCC,20.5,0.97619,0
2021-03-04,AAA,100,1.010101,0
2021-03-04,BBB,51,1.02,0
2021-03-04,CCC,20,0.97561,0
";

#[test]
fn thresholds_prints_golden_horizon_and_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["thresholds", "--n", "2", "--phi", "0.2", "--eps", "0.04", "--p", "-0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    let t: f64 = out.lines().find_map(|l| l.strip_prefix("threshold_T = ")).unwrap().parse().unwrap();
    assert!((t - 145.84).abs() / 145.84 < 1e-3, "{t}");
    assert!(out.contains("p range = ("));
    let j: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(with_suffix(&dir.path().join("out"), ".json")).unwrap()).unwrap();
    assert_eq!(j["valid"], true);
    assert!(j["parameter_range"]["lo"].as_f64().unwrap() < -0.5);
}

#[test]
fn simulate_twice_is_bytewise_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sim.cfg"),
        "[market]\nn = 3\nsigma = 0.2\nstep = 0.01\nhorizon = 0.5\nregime = { kind = \"reflect_nf\", phi = 0.05 }\n",
    )
    .unwrap();
    for out in ["a", "b"] {
        let o = run(dir.path(), &["simulate", "--config", "sim.cfg", "--paths", "100", "--seed", "7", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (files(&dir.path().join("a")), files(&dir.path().join("b")));
    assert_eq!(a.len(), 3);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}

#[test]
fn backtest_writes_ledger_metrics_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("toy.csv"), TOY).unwrap();
    let o = run(
        dir.path(),
        &["backtest", "--data", "toy.csv", "--family", "diversity", "--p", "-0.5", "--tv", "0.0015", "--cost", "0.005"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let ledger = std::fs::read_to_string(with_suffix(&out, "-ledger.csv")).unwrap();
    assert_eq!(ledger.lines().next().unwrap(), "date,wealth,turnover,costs_paid");
    assert_eq!(ledger.lines().count(), 5);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(with_suffix(&out, "-metrics.json")).unwrap()).unwrap();
    for key in ["market_rr", "sharpe", "gamma_total", "gamma_tilde", "stddev_daily"] {
        assert!(m.get(key).is_some(), "{key}");
    }
    let plot = std::fs::read_to_string(with_suffix(&out, "-plot.csv")).unwrap();
    assert!(plot.starts_with("series,date,value\n"));
    assert!(plot.lines().any(|l| l.starts_with("mu,")));
    assert!(plot.lines().any(|l| l.starts_with("pi_p(p=-0.5),")));
}

#[test]
fn market_backtest_plot_has_single_series() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("toy.csv"), TOY).unwrap();
    let o = run(dir.path(), &["backtest", "--data", "toy.csv", "--family", "market"]);
    assert!(o.status.success());
    let plot = std::fs::read_to_string(with_suffix(&dir.path().join("out"), "-plot.csv")).unwrap();
    assert!(plot.lines().skip(1).all(|l| l.starts_with("mu,")));
}

#[test]
fn report_emits_ten_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["report"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let plot = std::fs::read(with_suffix(&dir.path().join("out"), "-plot.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(plot.as_slice());
    let mut names: Vec<String> = rdr.records().map(|r| r.unwrap()[0].to_string()).collect();
    names.dedup();
    assert_eq!(names.len(), 10);
    assert_eq!(names[0], "mu");
}

#[test]
fn sweep_writes_one_json_per_cell_and_index() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("toy.csv"), TOY).unwrap();
    let o = run(
        dir.path(),
        &[
            "sweep",
            "--data",
            "toy.csv",
            "--family",
            "equal-weight",
            "--grid",
            "tv=0,0.001,0.01",
            "--grid",
            "cost=0,0.005",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let cells = files(&out).iter().filter(|p| p.to_string_lossy().contains("-cell-")).count();
    assert_eq!(cells, 6);
    let index = std::fs::read_to_string(with_suffix(&out, "-index.csv")).unwrap();
    assert_eq!(index.lines().count(), 7);
}

#[test]
fn verify_reports_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "verify",
            "--n",
            "3",
            "--sigma",
            "0.2",
            "--step",
            "0.01",
            "--horizon",
            "1",
            "--phi",
            "0.1",
            "--family",
            "diversity",
            "--p",
            "-0.5",
            "--paths",
            "8",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let j: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(with_suffix(&dir.path().join("out"), ".json")).unwrap()).unwrap();
    assert_eq!(j["n_paths"], 8);
    assert!(j["fraction_outperforming"].is_number());
    assert_eq!(j["nominal"]["phi"], 0.1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run(dir.path(), args).status.code().unwrap();
    assert_eq!(code(&["frobnicate"]), 1);
    let o = run(dir.path(), &["frobnicate"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["backtest", "--family", "diversity"]), 1);
    assert_eq!(code(&["backtest", "--family", "market", "--cost", "1.5"]), 1);
    assert_eq!(code(&["backtest", "--family", "market", "--data", "missing.csv"]), 1);
    assert_eq!(code(&["simulate", "--n", "3", "--phi", "0.5"]), 1);
    assert_eq!(code(&["thresholds", "--config", "nope.toml", "--n", "2"]), 1);
    std::fs::write(dir.path().join("bad.csv"), "date,asset,cap\n").unwrap();
    assert_eq!(code(&["backtest", "--family", "market", "--data", "bad.csv"]), 1);
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    assert_eq!(code(&["backtest", "--family", "market", "--out", "blocker/sub"]), 2);
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "out_dir = \"from_config\"\n").unwrap();
    let args = ["thresholds", "--config", "c.toml", "--n", "2", "--phi", "0.2", "--eps", "0.04", "--p", "-0.5"];
    assert!(run(dir.path(), &args).status.success());
    assert!(dir.path().join("from_config").is_dir());
    let o = bin().current_dir(dir.path()).env("SPT_LAB_OUT", "from_env").args(args).output().unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from_env").is_dir());
    let mut with_flag = args.to_vec();
    with_flag.extend(["--out", "from_flag"]);
    let o = bin().current_dir(dir.path()).env("SPT_LAB_OUT", "from_env").args(&with_flag).output().unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from_flag").is_dir());
    let names =
        |d: &str| files(&dir.path().join(d)).iter().map(|p| p.file_name().unwrap().to_owned()).collect::<Vec<_>>();
    assert_eq!(names("from_config"), names("from_env"));
    assert_eq!(names("from_env"), names("from_flag"));
}

#[test]
fn flags_override_config_and_change_hash() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[thresholds]\nn = 2\nphi = 0.2\neps = 0.04\np = -0.5\n").unwrap();
    let a = run(dir.path(), &["thresholds", "--config", "c.toml", "--out", "a"]);
    let b = run(dir.path(), &["thresholds", "--config", "c.toml", "--p", "-0.25", "--out", "b"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    let stem = |d: &str| files(&dir.path().join(d))[0].file_name().unwrap().to_owned();
    assert_ne!(stem("a"), stem("b"));
}
