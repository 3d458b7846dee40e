use std::path::PathBuf;
use std::process::Command;

use synbif_cli::{run, AnalyzeReport, EXIT_OK, EXIT_USAGE};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn synbif(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_synbif"))
        .args(args)
        .env_remove("SYNBIF_THREADS")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn analyze_lists_three_nodes_for_g() {
    let (code, out, _) = synbif(&["analyze", &data("g.json")]);
    assert_eq!(code, 0);
    assert!(out.contains("synchrony lattice (3 subspaces)"), "{out}");
    assert!(out.contains("seed 0"));
    for label in ["x1=x2=x3", "x2=x3", "R^3"] {
        assert!(out.contains(label));
    }
}

#[test]
fn predict_reports_valency_support_on_phase_space() {
    let (code, out, _) = synbif(&["predict", "--catalog", "E6_E4"]);
    assert_eq!(code, 0);
    let row = out
        .lines()
        .find(|l| l.starts_with("R^3") && l.contains("f0 + f1 + f2"))
        .expect("valency row for R^3");
    assert!(row.contains(" supports "), "{row}");
    assert!(row.contains("valency-synchrony-breaking"), "{row}");
}

#[test]
fn equiv_detects_relabelling() {
    let (code, out, _) = synbif(&["equiv", &data("g.json"), &data("g_permuted.json")]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "equivalent");
    let (code, out, _) = synbif(&["equiv", &data("g.json"), &data("c.json")]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "not equivalent");
}

#[test]
fn usage_errors_exit_64_with_synopsis() {
    let (code, _, err) = synbif(&["frobnicate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("Usage"));
    assert_eq!(run(["synbif", "analyze"]), EXIT_USAGE);
    assert_eq!(run(["synbif", "analyze", "--catalog", "A", "--format", "xml"]), EXIT_USAGE);
    assert_eq!(run(["synbif", "predict", "--catalog", "A", "--format", "csv"]), EXIT_USAGE);
    assert_eq!(run(["synbif", "--help"]), EXIT_OK);
}

#[test]
fn analysis_errors_exit_1() {
    assert_eq!(run(["synbif", "analyze", "--catalog", "no-such-network"]), 1);
    assert_eq!(run(["synbif", "analyze", "/nonexistent/net.json"]), 1);
    assert_eq!(run(["synbif", "equiv", &data("g.json"), "/nonexistent/net.json"]), 1);
}

#[test]
fn analyze_json_round_trips() {
    let dir = std::env::temp_dir().join(format!("synbif-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let code = run([
        "synbif",
        "analyze",
        "--catalog",
        "C1_D4",
        "--format",
        "json",
        "--seed",
        "7",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let report: AnalyzeReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.seed, 7);
    assert_eq!(serde_json::to_string_pretty(&report).unwrap().trim_end(), text.trim_end());
    let again: AnalyzeReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(again, report);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_is_deterministic_for_a_fixed_seed() {
    let a = synbif(&["analyze", "--catalog", "C1_C2", "--format", "json", "--seed", "3"]);
    let b = synbif(&["analyze", "--catalog", "C1_C2", "--format", "json", "--seed", "3", "--sequential"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
}

#[test]
fn dot_output_is_a_digraph() {
    let (code, out, _) = synbif(&["classify", &data("g.json"), "--format", "dot"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("digraph"));
    assert!(out.contains("n0 -> n1;"));
    assert!(out.contains("n1 -> n2;"));
}

#[test]
fn verify_passes_on_a_small_budget() {
    let (code, out, _) = synbif(&[
        "verify", &data("g.json"), "--grid", "11", "--starts", "60", "--seeds", "2",
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().any(|l| l.starts_with("PASS")));
    assert!(!out.lines().any(|l| l.starts_with("FAIL")));
}

#[test]
fn verify_csv_exports_branches() {
    let (code, out, _) = synbif(&[
        "verify", &data("g.json"), "--format", "csv", "--condition", "f0 - f2", "--grid", "11", "--starts", "60",
    ]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("lambda,x1,x2,x3,branch,synchrony"));
    assert!(lines.next().is_some());
    let (code, _, _) = synbif(&["verify", &data("g.json"), "--format", "csv", "--condition", "f7"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn catalog_show_cross_checks() {
    let (code, out, _) = synbif(&["catalog", "show", "E6_B1"]);
    assert_eq!(code, 0);
    assert!(out.contains("ok  "));
    let (code, out, _) = synbif(&["catalog", "list", "--format", "json"]);
    assert_eq!(code, 0);
    let rows: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(rows.as_array().unwrap().len() > 20);
}

#[test]
fn starved_verify_budget_reports_fail_with_exit_2() {
    let (code, out, _) = synbif(&[
        "verify", &data("g.json"), "--grid", "3", "--starts", "1", "--seeds", "1",
    ]);
    assert_eq!(code, synbif_cli::EXIT_VERIFY_FAIL, "{out}");
    assert!(out.lines().any(|l| l.starts_with("FAIL")));
}
