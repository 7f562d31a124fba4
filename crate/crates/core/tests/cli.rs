use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;
use serde_json::Value;

fn bcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcp")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CONSTANT_1: &str = r#"{"kind": "constant", "t": 1}"#;

#[test]
fn loo_on_three_points() {
    let dir = tempfile::tempdir().unwrap();
    let scores = write(dir.path(), "s.csv", "label,s0,s1\n0,1,4\n0,2,5\n0,3,6\n");
    let v = json(&bcp(&["loo", "--scores", &scores, "--rule", CONSTANT_1]));
    assert_abs_diff_eq!(v["alpha_loo"].as_f64().unwrap(), 0.616_67, epsilon = 1e-5);
    let per_j: Vec<f64> = v["per_j"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(per_j.len(), 3);
    assert_abs_diff_eq!(per_j[0], 0.75, epsilon = 1e-12);
    assert_eq!(v["observed_min"].as_f64(), Some(1.0));
    assert_eq!(v["observed_max"].as_f64(), Some(3.0));
    // floats carry 17 significant digits
    assert!(String::from_utf8_lossy(&bcp(&["loo", "--scores", &scores, "--rule", CONSTANT_1]).stdout)
        .contains("7.5000000000000000e-1"));
}

#[test]
fn run_holds_out_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let scores = write(dir.path(), "s.csv", "label,s0,s1,s2\n0,1,9,9\n1,9,2,9\n2,9,9,3\n0,0.5,2,4\n");
    let rule = write(dir.path(), "rule.json", r#"{"rule": {"kind": "constant", "t": 2}}"#);
    let v = json(&bcp(&["run", "--scores", &scores, "--rule", &rule, "--test-row", "3"]));
    assert_abs_diff_eq!(v["alpha"].as_f64().unwrap(), 0.625, epsilon = 1e-12);
    assert_eq!(v["set"], serde_json::json!([0, 1]));
    assert_eq!(v["degenerate"], false);
    assert_eq!(v["covered"], true);
    assert_eq!(v["n"], 3);
    assert_eq!(v["cap"], 2);
    let bisect = v["alpha_bisect"].as_f64().unwrap();
    assert!((bisect - 0.625).abs() <= 0.005);
}

#[test]
fn bound_and_trust() {
    let v = json(&bcp(&["bound", "--n", "100", "--smin", "1", "--smax", "1", "--delta", "0.05"]));
    assert_abs_diff_eq!(v["r_delta"].as_f64().unwrap(), 0.569_67, epsilon = 5e-4);
    assert!(v.get("trust").is_none());

    let v = json(&bcp(&[
        "bound", "--n", "100", "--smin", "1", "--smax", "1", "--delta", "0.05", "--mu", "2", "--alpha-loo", "0.01",
        "--tau", "0.3",
    ]));
    assert!(v["bound_with_mu"].as_f64().unwrap() < v["r_delta"].as_f64().unwrap());
    assert_eq!(v["trust"]["decision"], "trust");
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "c.json",
        r#"{"n": 50, "K": 5, "rule": {"kind": "constant", "t": 1},
            "generator": {"kind": "softmax-logit", "signal": 2.0}, "N": 20, "master_seed": 9}"#,
    );
    let out = dir.path().join("out");
    let o = bcp(&["simulate", "--config", &config, "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["summary.json", "histogram.csv", "trials.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let s: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["num_trials"], 20);
    assert_eq!(s["seed"], 9);
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad_label = write(dir.path(), "bad.csv", "label,s0,s1\n0,1,2\n5,1,2\n");
    let o = bcp(&["loo", "--scores", &bad_label, "--rule", CONSTANT_1]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let scores = write(dir.path(), "s.csv", "label,s0,s1\n0,1,4\n0,2,5\n0,3,6\n");
    let o = bcp(&["run", "--scores", &scores, "--rule", CONSTANT_1, "--test-row", "9"]);
    assert!(!o.status.success());

    let entropy = r#"{"kind": "entropy", "k": 1, "t_min": 1, "t_max": 2}"#;
    assert!(!bcp(&["loo", "--scores", &scores, "--rule", entropy]).status.success());

    let o = bcp(&["bound", "--n", "2", "--smin", "1", "--smax", "4", "--delta", "0.05"]);
    assert!(!o.status.success());
    let o = bcp(&["bound", "--n", "100", "--smin", "1", "--smax", "1", "--delta", "0.05", "--tau", "0.9"]);
    assert!(!o.status.success());
    assert!(!bcp(&["loo", "--scores", "/no/such.csv", "--rule", CONSTANT_1]).status.success());
}
