use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use tempfile::TempDir;

const BASE: &str = r#"
seed = 11

[simulate]
t = 150
start = "2001-01"
delays = { b = 1, q = 1 }

[simulate.dgp]
ids = ["a", "b", "q"]
n_m = 2
pi = [[0.5, 0.0, 0.0, 0.1, 0.0, 0.0],
      [0.0, 0.4, 0.0, 0.0, 0.0, 0.0],
      [0.1, 0.0, 0.6, 0.0, 0.0, 0.0]]
sigma = [[1.0, 0.2, 0.1], [0.2, 1.0, 0.1], [0.1, 0.1, 0.5]]
psi = [2.0, -1.0, 3.0]
phi = 0.9
sigma2_h = 0.05
burn = 100

[data]
panel = "sim/panel_full.csv"
quarterly = ["q"]
delays = { b = 1, q = 1 }

[prior]
model = "SS-CSV"
p = 4
ss_mean = [1.5, -0.5, 2.5]
ss_sd = [1.0, 1.0, 1.0]

[sampler]
draws = 20
burnin = 5
batch = 5

[forecast]
monthly_horizon = 3
quarterly_horizon = 2
"#;

fn setup(extra: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), format!("{BASE}{extra}")).unwrap();
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_mfbvar"))
        .arg("--config")
        .arg(dir.join("run.toml"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    out
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "mfbvar {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn simulate(dir: &Path) {
    let sim = dir.join("sim");
    ok(dir, &["--output", sim.to_str().unwrap(), "simulate"]);
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn simulation_is_deterministic_and_aggregates_the_truth() {
    let a = setup("");
    let b = setup("");
    simulate(a.path());
    simulate(b.path());
    for f in ["panel_full.csv", "panel.csv", "truth.csv", "params.json"] {
        assert_eq!(
            fs::read(a.path().join("sim").join(f)).unwrap(),
            fs::read(b.path().join("sim").join(f)).unwrap(),
            "{f} differs between runs"
        );
    }
    let panel = read_csv(&a.path().join("sim/panel_full.csv"));
    let truth = read_csv(&a.path().join("sim/truth.csv"));
    assert_eq!(panel[0], vec!["date", "a", "b", "q"]);
    assert_eq!(panel.len(), truth.len());
    let w = [1.0, 2.0, 3.0, 2.0, 1.0];
    let mut checked = 0;
    for t in 5..panel.len() {
        if panel[t][3].is_empty() {
            continue;
        }
        let q: f64 = panel[t][3].parse().unwrap();
        let agg: f64 = (0..5).map(|k| w[k] * truth[t - k][3].parse::<f64>().unwrap()).sum::<f64>() / 9.0;
        assert!((q - agg).abs() < 1e-12, "row {t}: {q} vs {agg}");
        checked += 1;
    }
    assert!(checked >= 40);
    // the ragged panel drops the final month of the delayed series
    let ragged = read_csv(&a.path().join("sim/panel.csv"));
    assert!(ragged.last().unwrap()[2].is_empty());
    assert!(!ragged.last().unwrap()[1].is_empty());
}

#[test]
fn explosive_dgp_refused() {
    let dir = setup("");
    let text = fs::read_to_string(dir.path().join("run.toml"))
        .unwrap()
        .replace("[[0.5, 0.0, 0.0, 0.1", "[[1.05, 0.0, 0.0, 0.1");
    fs::write(dir.path().join("run.toml"), text).unwrap();
    let out = run(dir.path(), &["--output", "unused", "simulate"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("explosive"));
}

#[test]
fn unknown_config_keys_rejected() {
    let dir = setup("[sampler2]\ndraws = 1\n");
    let out = run(dir.path(), &["simulate"]);
    assert!(!out.status.success());
}

#[test]
fn estimate_is_reproducible_and_forecasts() {
    let dir = setup("");
    simulate(dir.path());
    let e1 = dir.path().join("e1");
    let e2 = dir.path().join("e2");
    let h1 = ok(dir.path(), &["--output", e1.to_str().unwrap(), "estimate"]);
    let h2 = ok(dir.path(), &["--output", e2.to_str().unwrap(), "estimate"]);
    assert!(h1.starts_with("manifest sha256 "));
    assert_eq!(h1, h2);
    let draws = fs::read_to_string(e1.join("draws.jsonl")).unwrap();
    assert_eq!(draws.lines().count(), 15);
    for f in ["steady_state.csv", "steady_state_draws.csv", "volatility.csv", "manifest.json"] {
        assert!(e1.join(f).exists(), "{f} missing");
    }
    let h3 = ok(dir.path(), &["--seed", "12", "--output", e2.to_str().unwrap(), "estimate"]);
    assert_ne!(h1, h3);

    ok(dir.path(), &["--output", e1.to_str().unwrap(), "forecast"]);
    let summary = read_csv(&e1.join("forecast.csv"));
    assert_eq!(summary[0], vec!["variable", "horizon", "mean", "sd", "q05", "q50", "q95"]);
    // a, b from h = 1 (observed last month), q from h = 0
    assert_eq!(summary.len(), 1 + 3 + 3 + 3);
    let raw = read_csv(&e1.join("forecast_draws.csv"));
    assert_eq!(raw.len(), 1 + 15 * 9);
}

#[test]
fn evaluation_against_itself_is_neutral() {
    let extra = r#"
[evaluate]
start = "2012-03"
end = "2012-05"
models = ["SS-IW", "Minn-IW"]
quarterly_benchmark = "SS-IW"
monthly_benchmark = "SS-IW"
"#;
    let dir = setup(extra);
    let text = fs::read_to_string(dir.path().join("run.toml"))
        .unwrap()
        .replace("draws = 20\nburnin = 5", "draws = 300\nburnin = 100");
    fs::write(dir.path().join("run.toml"), text).unwrap();
    simulate(dir.path());
    let t0 = Instant::now();
    let ev = dir.path().join("ev");
    let tables = ok(dir.path(), &["--output", ev.to_str().unwrap(), "evaluate"]);
    assert!(t0.elapsed().as_secs() < 300);
    assert!(tables.contains("Relative LPDS (model - benchmark)"));
    assert!(tables.contains("Minn-IW"));
    let report = read_csv(&ev.join("report.csv"));
    let rel_lpds = report[0].iter().position(|c| c == "rel_lpds").unwrap();
    let rel_rmse = report[0].iter().position(|c| c == "rel_rmse").unwrap();
    let own: Vec<&Vec<String>> = report.iter().skip(1).filter(|r| r[0] == "SS-IW").collect();
    assert!(!own.is_empty());
    for r in own {
        if !r[rel_lpds].is_empty() {
            assert_eq!(r[rel_lpds].parse::<f64>().unwrap(), 0.0);
        }
        if !r[rel_rmse].is_empty() {
            assert_eq!(r[rel_rmse].parse::<f64>().unwrap(), 1.0);
        }
    }
    assert!(ev.join("scores.csv").exists());
}

#[test]
fn series_manifest_input() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = String::from("date,value\n");
    let mut level = 100.0f64;
    for t in 0..120 {
        level *= 1.0 + 0.002 + 0.003 * ((t as f64) * 0.7).sin();
        m += &format!("{}-{:02},{level}\n", 2001 + t / 12, t % 12 + 1);
    }
    let mut q = String::from("date,value\n");
    let mut gdp = 500.0f64;
    for k in 0..40 {
        gdp *= 1.0 + 0.005 + 0.004 * ((k as f64) * 1.3).cos();
        q += &format!("{}Q{},{gdp}\n", 2001 + k / 4, k % 4 + 1);
    }
    fs::write(dir.path().join("ip.csv"), m).unwrap();
    fs::write(dir.path().join("gdp.csv"), q).unwrap();
    let cfg = r#"
seed = 3

[[data.series]]
id = "ip"
path = "ip.csv"
transform = "log_diff"
scale = 1200

[[data.series]]
id = "gdp"
path = "gdp.csv"
transform = "log_diff"
scale = 400
delay_months = 1

[prior]
model = "Minn-IW"
p = 4

[sampler]
draws = 30
burnin = 10
batch = 5
"#;
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let out = dir.path().join("est");
    ok(dir.path(), &["--output", out.to_str().unwrap(), "estimate"]);
    let ss = fs::read_to_string(out.join("steady_state.csv")).unwrap();
    assert!(ss.contains("ip") && ss.contains("gdp"), "{ss}");
    assert_eq!(fs::read_to_string(out.join("draws.jsonl")).unwrap().lines().count(), 20);
}
