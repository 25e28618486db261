use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ucb-ncs"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "T = 400\n");
    let cfg = cfg.to_str().unwrap();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let res = run(&["simulate", "--config", cfg, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for name in [
        "trajectory_ucb.csv",
        "trajectory_oracle.csv",
        "estimator_ucb.csv",
        "episodes_ucb.csv",
        "paired.csv",
        "summary_ucb.json",
        "summary_oracle.json",
    ] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn different_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "T = 100\n");
    let cfg = cfg.to_str().unwrap();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let res = run(&["simulate", "-c", cfg, "--seed", seed, "--out", out.to_str().unwrap(), "--controller", "oracle"]);
        assert!(res.status.success());
    }
    let a = std::fs::read(dir.path().join("1/trajectory_oracle.csv")).unwrap();
    let b = std::fs::read(dir.path().join("2/trajectory_oracle.csv")).unwrap();
    assert_ne!(a, b);
    assert!(!dir.path().join("1/trajectory_ucb.csv").exists());
}

#[test]
fn noiseless_paired_difference_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "T = 300\nsigma_w = 0.0\nx0 = 0.0\n");
    let out = dir.path().join("out");
    let res = run(&["simulate", "-c", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--controller", "both"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let mut rdr = csv::Reader::from_path(out.join("paired.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["t", "regret_ucb", "regret_oracle", "regret_diff"]
    );
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[3].parse::<f64>().unwrap(), 0.0);
        rows += 1;
    }
    assert_eq!(rows, 300);
}

#[test]
fn csv_headers_are_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "T = 120\n");
    let out = dir.path().join("out");
    assert!(run(&["simulate", "-c", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    let first_line = |name: &str| {
        std::fs::read_to_string(out.join(name)).unwrap().lines().next().unwrap().to_string()
    };
    assert_eq!(first_line("trajectory_ucb.csv"), "t,x,u,ell,w,cost,cum_cost,regret");
    assert_eq!(first_line("estimator_ucb.csv"), "t,A_hat,B_hat,p_hat,beta1,beta2,beta3,V1,V2");
    assert_eq!(first_line("episodes_ucb.csv"), "episode_index,tau,A,B,p,J_selected");
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary_ucb.json")).unwrap()).unwrap();
    assert_eq!(summary["T"], 120);
}

#[test]
fn unknown_key_is_named_in_a_one_line_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "gamma = 3.0\n");
    let res = run(&["bounds", "--config", cfg.to_str().unwrap()]);
    assert!(!res.status.success());
    let err = String::from_utf8(res.stderr).unwrap();
    assert!(err.contains("`gamma`"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn non_positive_margin_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eta = 0.0\n");
    let res = run(&["bounds", "--config", cfg.to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(String::from_utf8(res.stderr).unwrap().contains("eta"));
}

#[test]
fn bounds_report_keys_and_state_bound_example() {
    let dir = tempfile::tempdir().unwrap();
    // T / delta = e, eta = log 2, x0 = 0.
    let body = format!(
        "T = 1\ndelta = {}\neta = {}\nx0 = 0.0\n",
        (-1.0f64).exp(),
        std::f64::consts::LN_2
    );
    let cfg = write_config(dir.path(), &body);
    let report = stdout_json(&run(&["bounds", "-c", cfg.to_str().unwrap()]));
    let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    let mut expected = vec![
        "eta", "epsilon", "g", "f", "h", "K_max", "P_max", "G_cl_max", "C1", "U1", "U2", "failure_budget",
        "assumption1_satisfied",
    ];
    let mut got = keys.clone();
    got.sort_unstable();
    expected.sort_unstable();
    assert_eq!(got, expected);
    assert!((report["g"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn unsatisfied_margin_is_reported_not_raised() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "theta_box = [0.5, 2.0, 0.5, 2.0, 0.3, 0.95]\n");
    let report = stdout_json(&run(&["bounds", "-c", cfg.to_str().unwrap()]));
    assert_eq!(report["assumption1_satisfied"], false);
}

#[test]
fn riccati_prints_gains() {
    let out = stdout_json(&run(&["riccati", "--a", "0.5", "--b", "1", "--p", "1"]));
    assert!((out["K1"].as_f64().unwrap() + 0.2655644370746374).abs() < 1e-9);
    assert!((out["P1"].as_f64().unwrap() - 1.1327822185373186).abs() < 1e-9);
    assert_eq!(out["K0"].as_f64().unwrap(), 0.0);
    assert_eq!(out["converged"], true);
}

#[test]
fn sweep_rejects_duplicates_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = run(&["sweep", "--horizons", "200,200", "--n-runs", "1", "--out", out.to_str().unwrap()]);
    assert!(!res.status.success());
    let res = stdout_json(&run(&["sweep", "--horizons", "200,400", "--n-runs", "1", "--out", out.to_str().unwrap()]));
    let row = &res["rows"][0];
    assert_eq!(row["q1_regret"], row["median_regret"]);
    assert_eq!(row["q3_regret"], row["median_regret"]);
    assert!(res["exponent"].is_number() || res["exponent"].is_null());
    assert!(out.join("sweep.csv").exists() && out.join("sweep.json").exists());
}

#[test]
fn coverage_needs_a_hundred_runs() {
    let res = run(&["coverage", "--n-runs", "99"]);
    assert!(!res.status.success());
    assert!(String::from_utf8(res.stderr).unwrap().contains("100"));
}

#[test]
fn coverage_degenerate_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "T = 200\nsigma_w = 0.0\nx0 = 1.0\np_star = 1.0\n");
    let report = stdout_json(&run(&["coverage", "-c", cfg.to_str().unwrap(), "--n-runs", "100"]));
    assert_eq!(report["h_c_literal"]["count"], 0);
    assert_eq!(report["h_c_gaussian_tail"]["count"], 0);
    assert_eq!(report["e_c_by_coordinate"][2]["count"], 0);
    assert_eq!(report["j_c_window"]["count"], 0);
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let res = run(&["simulate", "--out", blocker.join("sub").to_str().unwrap()]);
    assert!(!res.status.success());
}
