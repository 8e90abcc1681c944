use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
        .display()
        .to_string()
}

fn probe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probe"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn metric(report: &Value, name: &str) -> f64 {
    report["metrics"][name]["value"].as_f64().unwrap()
}

#[test]
fn oracle_on_twelve_elements() {
    let out = probe(&[
        "oracle",
        "--instance",
        &data("instances/twelve-elements.json"),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["config"]["elements"], 12);
    assert_eq!(r["metrics"]["opt"]["provenance"], "oracle");
    assert!(metric(&r, "opt") > 0.0);
}

#[test]
fn greedy_ratio_matches_metrics() {
    let out = probe(&[
        "greedy",
        "--instance",
        &data("instances/unweighted-k3.json"),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let ratio = r["ratios"][0]["value"].as_f64().unwrap();
    assert_eq!(ratio, metric(&r, "greedy_value") / metric(&r, "opt"));
    assert!(ratio >= 1.0 / 3.0 - 1e-9);
}

#[test]
fn certify_reports_per_path_verdicts() {
    let out = probe(&[
        "certify",
        "--instance",
        &data("instances/unweighted-k3.json"),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let paths = r["details"]["paths"].as_array().unwrap();
    assert!(!paths.is_empty());
    assert!(paths.iter().all(|p| p["feasible"] == true));
    let total: f64 = paths
        .iter()
        .map(|p| p["probability"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = [
        "round",
        "--instance",
        &data("instances/weighted-k2.json"),
        "--seed",
        "11",
        "--trials",
        "2000",
        "--format",
        "json",
    ];
    let a = probe(&args);
    let b = probe(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert_eq!(
        r["metrics"]["expected_value"]["provenance"],
        "monte_carlo(2000)"
    );
}

#[test]
fn lp_and_simulate_run() {
    let lp = json(&probe(&[
        "lp",
        "--instance",
        &data("instances/weighted-k2.json"),
        "--format",
        "json",
    ]));
    assert!(metric(&lp, "lp_objective") > 0.0);
    let sim = probe(&[
        "simulate",
        "--policy",
        "rounding",
        "--instance",
        &data("instances/weighted-k2.json"),
        "--trials",
        "500",
        "--outer-scheme",
        "ordered-random",
        "--format",
        "json",
    ]);
    assert_eq!(sim.status.code(), Some(0));
    let r = json(&sim);
    assert!(metric(&r, "value") <= metric(&r, "lp_objective") + 1e-9);
}

#[test]
fn deadline_commands() {
    let path = data("instances/deadline-k2.json");
    let g = json(&probe(&[
        "greedy-deadline",
        "--instance",
        &path,
        "--format",
        "json",
    ]));
    let opt = json(&probe(&[
        "oracle",
        "--deadline",
        "--instance",
        &path,
        "--format",
        "json",
    ]));
    assert_eq!(metric(&g, "opt"), metric(&opt, "opt"));
    assert!(metric(&g, "greedy_value") >= metric(&g, "opt") / 6.0 - 1e-9);
}

#[test]
fn spm_best_of_reports_revenue() {
    let out = probe(&[
        "spm",
        "--instance",
        &data("auctions/uniform-k1.json"),
        "--best-of",
        "5",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(metric(&r, "lp_p") >= metric(&r, "lp_m") - 1e-6);
    assert!(metric(&r, "revenue") >= metric(&r, "bound") - 1e-3);
}

#[test]
fn verify_cr_text_output() {
    let out = probe(&[
        "verify-cr",
        "--instance",
        &data("instances/weighted-k2.json"),
        "--trials",
        "5000",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS outer_retention"));
    assert!(text.ends_with("overall: PASS\n"));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"schema_version": 1, "elements": [{"weight": 1, "p": 1.5}],
            "inner": {"type": "free"}, "outer": {"type": "free"}}"#,
    )
    .unwrap();
    let out = probe(&["lp", "--instance", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("PROB_RANGE"));
    assert_eq!(
        probe(&["lp", "--instance", "/nonexistent.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(probe(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn strict_mode_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("extra.json");
    std::fs::write(
        &path,
        r#"{"schema_version": 1, "elements": [{"weight": 1, "p": 0.5}], "note": "x",
            "inner": {"type": "free"}, "outer": {"type": "free"}}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let strict = probe(&["lp", "--instance", p, "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("UNKNOWN_FIELD"));
    let lenient = json(&probe(&["lp", "--instance", p, "--format", "json"]));
    assert_eq!(lenient["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn acceptance_requires_seed_and_reports_table() {
    assert_eq!(
        probe(&["acceptance", "--criterion", "3"]).status.code(),
        Some(2)
    );
    let out = probe(&[
        "acceptance",
        "--criterion",
        "3",
        "--criterion",
        "9",
        "--seed",
        "5",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let table = r["details"]["criteria"].as_array().unwrap();
    assert_eq!(table.len(), 2);
    assert!(table.iter().all(|c| c["passed"] == true));
}

#[test]
fn failed_bound_exits_with_one() {
    let out = probe(&[
        "acceptance",
        "--criterion",
        "11",
        "--seed",
        "1",
        "--trials",
        "2000",
        "--format",
        "json",
    ]);
    let r = json(&out);
    let passed = r["passed"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if passed { 0 } else { 1 }));
}
