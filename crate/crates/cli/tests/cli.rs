use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ptme(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptme"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = ptme(dir, args);
    assert!(
        out.status.success(),
        "ptme {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|row| row.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn run_writes_one_log_per_seed_with_the_full_budget() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["run", "--problem", "archery", "--method", "ptme", "--budget", "3000", "--cells", "200", "--seeds", "0..9", "--out", "out"],
    );
    for seed in 0..10 {
        let run = tmp.path().join(format!("out/ptme/{seed}"));
        let log = fs::read_to_string(run.join("log.jsonl")).unwrap();
        assert_eq!(log.lines().count(), 3000);
        assert!(run.join("meta.json").exists());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    for out in ["a", "b"] {
        ok(
            tmp.path(),
            &["run", "--problem", "arm10", "--method", "ptme", "--budget", "1500", "--cells", "50", "--seeds", "3", "--out", out],
        );
    }
    let a = fs::read(tmp.path().join("a/ptme/3/log.jsonl")).unwrap();
    let b = fs::read(tmp.path().join("b/ptme/3/log.jsonl")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn full_regression_never_uses_sbx() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["run", "--problem", "archery", "--method", "ptme_full_reg", "--budget", "1000", "--cells", "50", "--out", "out"],
    );
    let log = fs::read_to_string(tmp.path().join("out/ptme_full_reg/0/log.jsonl")).unwrap();
    assert!(!log.contains("\"sbx\""));
    assert!(log.contains("\"regression\""));
}

#[test]
fn manifest_fields_are_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    let manifest = r#"{"problem": "linear_toy(2)", "method": "random", "config": {"budget": 400}, "seeds": [1, 2], "output_dir": "m"}"#;
    fs::write(tmp.path().join("exp.json"), manifest).unwrap();
    ok(tmp.path(), &["run", "--manifest", "exp.json", "--budget", "250"]);
    for seed in [1, 2] {
        let log = fs::read_to_string(tmp.path().join(format!("m/random/{seed}/log.jsonl"))).unwrap();
        assert_eq!(log.lines().count(), 250);
        assert!(log.lines().all(|l| l.contains("\"op\":\"random\"")));
    }
}

#[test]
fn invalid_manifest_lists_every_offending_field() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("bad.json"),
        r#"{"problem": "chess", "method": "ptme", "config": {"budget": 10, "sigma_sbx": -1.0}}"#,
    )
    .unwrap();
    let out = ptme(tmp.path(), &["run", "--manifest", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("problem"), "{err}");
    assert!(err.contains("budget"), "{err}");
    assert!(err.contains("sigma_sbx"), "{err}");
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("file"), "not a directory").unwrap();
    let out = ptme(
        tmp.path(),
        &["run", "--problem", "archery", "--budget", "300", "--cells", "10", "--out", "file/runs"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resolution_one_schedule_reports_the_best_fitness() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["run", "--problem", "arm10", "--method", "ptme", "--budget", "800", "--cells", "40", "--out", "out"],
    );
    let log = tmp.path().join("out/ptme/0/log.jsonl");
    let best = fs::read_to_string(&log)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["f"].as_f64().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    ok(tmp.path(), &["metrics", "out/ptme/0/log.jsonl", "--schedule", "1", "--out", "metrics"]);
    let rows = read_rows(&tmp.path().join("metrics/qd_scores.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][..3], ["ptme", "0", "1"]);
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), best);
    let summary = read_rows(&tmp.path().join("metrics/summary.csv"));
    assert_eq!(summary[0][2].parse::<f64>().unwrap(), best);
}

#[test]
fn pvalue_table_is_complementary_under_swap() {
    let tmp = TempDir::new().unwrap();
    for method in ["ptme", "random"] {
        ok(
            tmp.path(),
            &["run", "--problem", "linear_toy", "--method", method, "--budget", "600", "--cells", "30", "--seeds", "0..9", "--out", "out"],
        );
    }
    ok(tmp.path(), &["metrics", "out", "--schedule", "1,5,30,100", "--out", "metrics"]);
    let summary = read_rows(&tmp.path().join("metrics/summary.csv"));
    assert_eq!(summary.len(), 20);
    let rows = read_rows(&tmp.path().join("metrics/pvalues.csv"));
    assert_eq!(rows.len(), 2);
    let p = |a: &str, b: &str| -> f64 {
        rows.iter().find(|r| r[0] == a && r[1] == b).unwrap()[2].parse().unwrap()
    };
    assert!((p("ptme", "random") + p("random", "ptme") - 1.0).abs() < 1e-12);

    let compared = ok(tmp.path(), &["compare", "metrics/summary.csv"]);
    assert!(compared.starts_with("method_a,method_b,p_value"));
    assert_eq!(compared.lines().count(), 3);
}

#[test]
fn malformed_log_line_is_reported_with_file_and_line() {
    let tmp = TempDir::new().unwrap();
    let good = r#"{"i":0,"op":"random","theta":[0.5,0.5],"x":[0.1],"f":0.5}"#;
    fs::write(tmp.path().join("broken.jsonl"), format!("{good}\n{{\"i\": 1, oops\n")).unwrap();
    let out = ptme(tmp.path(), &["metrics", "broken.jsonl", "--schedule", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("broken.jsonl:2:"), "{err}");
}

#[test]
fn distill_rejects_resolution_one() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["run", "--problem", "linear_toy", "--budget", "300", "--cells", "20", "--out", "out"],
    );
    let out = ptme(tmp.path(), &["distill", "out/ptme/0/log.jsonl", "--resolution", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resolution"));
}

#[test]
fn linear_toy_distillation_scores_high() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["run", "--problem", "linear_toy", "--method", "ptme", "--budget", "10000", "--out", "out"],
    );
    ok(
        tmp.path(),
        &["distill", "out/ptme/0/log.jsonl", "--resolution", "500", "--probes", "1000"],
    );
    let report = read_rows(&tmp.path().join("out/ptme/0/inference.csv"));
    let score: f64 = report[0][7].parse().unwrap();
    assert!(score >= 0.95, "inference score {score}");
    assert!(tmp.path().join("out/ptme/0/policy.json").exists());

    let x = ok(tmp.path(), &["infer", "--policy", "out/ptme/0/policy.json", "--theta", "0.3,0.6"]);
    let values: Vec<f64> = x.trim().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(values.len(), 4);
    assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
    let again = ok(tmp.path(), &["infer", "--policy", "out/ptme/0/policy.json", "--theta", "0.3,0.6"]);
    assert_eq!(x, again);

    let scored = ok(
        tmp.path(),
        &["infer", "--policy", "out/ptme/0/policy.json", "--problem", "linear_toy", "--probes", "1000"],
    );
    assert_eq!(scored.trim().parse::<f64>().unwrap(), score);

    ok(tmp.path(), &["metrics", "out", "--schedule", "1,10", "--out", "metrics"]);
    let summary = read_rows(&tmp.path().join("metrics/summary.csv"));
    assert_eq!(summary[0][3].parse::<f64>().unwrap(), score);
}

#[test]
fn unknown_subcommand_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(ptme(tmp.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(ptme(tmp.path(), &["--help"]).status.code(), Some(0));
}
