use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const TWO_CYCLES: &str = r#""graph": { "vertices": 4, "edges": [[1, 2], [2, 3], [3, 1], [4, 3], [1, 4]] }"#;
const LENGTHS: &str = r#""lengths": { "values": [4.0, 6.76, 4.0, 10.89, 1.96], "convention": "squared" }"#;
const LAW: &str = r#""law": { "name": "gradient_squared" }"#;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formation-forge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &TempDir, path: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()];
    args.extend_from_slice(extra);
    forge(&args)
}

fn write_scenario(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn error_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not a JSON record ({e}): {text}"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn fig2_census_reports_a_stable_ancillary() {
    let dir = TempDir::new().unwrap();
    let out = run_in(&dir, &scenario("fig2.json"), &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| l.trim_start().starts_with(char::is_numeric)).collect();
    assert!(rows.len() >= 3);
    assert!(rows.iter().any(|r| r.contains("design") && r.contains(" yes ")));
    assert!(rows.iter().any(|r| r.contains("design") && r.contains(" no ")));
    assert!(rows.iter().any(|r| r.contains("ancillary_aligned") && r.contains(" yes ")));
    assert!(text.contains("almost surely stable: no"));
    assert!(text.contains("feasible: yes"));
    let csv = std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    assert!(csv.starts_with("kind,stable,index,residual,leading_real,re1,im1"));
    let summary = std::fs::read_to_string(dir.path().join("fig2.txt")).unwrap();
    assert!(text.starts_with(&summary));
}

#[test]
fn identical_inputs_give_identical_bytes() {
    for name in ["fig2.json", "sweep_s0.json", "simulate.json"] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        assert_eq!(run_in(&a, &scenario(name), &[]).status.code(), Some(0));
        assert_eq!(run_in(&b, &scenario(name), &[]).status.code(), Some(0));
        let stem = name.trim_end_matches(".json");
        let read = |d: &TempDir| std::fs::read(d.path().join(format!("{stem}.csv"))).unwrap();
        assert_eq!(read(&a), read(&b), "{name}");
    }
}

#[test]
fn seed_flag_overrides_the_scenario() {
    let dir = TempDir::new().unwrap();
    let out = run_in(&dir, &scenario("fig2.json"), &["--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("seed 7"));
}

#[test]
fn canonical_sweep_detects_the_exchange() {
    let dir = TempDir::new().unwrap();
    let out = run_in(&dir, &scenario("sweep_s0.json"), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("transcritical: detected"));
    let csv = std::fs::read_to_string(dir.path().join("sweep_s0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 43);
    assert!(csv.starts_with("mu,branch,kind,leading_real,stable,e1,e2,e3,e4,e5,x1,y1"));
}

#[test]
fn empty_sweep_is_indeterminate() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        r#"{{ "format": 1, {TWO_CYCLES}, {LENGTHS}, {LAW}, "experiment": {{ "kind": "sweep", "samples": 0 }} }}"#
    );
    let out = run_in(&dir, &write_scenario(&dir, "empty.json", &body), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().any(|l| l.starts_with("transcritical: indeterminate")));
    let csv = std::fs::read_to_string(dir.path().join("empty.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn rigidity_line() {
    let dir = TempDir::new().unwrap();
    let out = run_in(&dir, &scenario("rigidity.json"), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("rank 5 of 5 (infinitesimally rigid, minimally rigid)"));

    let body = format!(
        r#"{{ "format": 1, {TWO_CYCLES}, {LENGTHS}, {LAW},
             "experiment": {{ "kind": "rigidity", "positions": [[0, 0], [1, 0], [3, 0], [-2, 0]] }} }}"#
    );
    let out = run_in(&dir, &write_scenario(&dir, "line.json", &body), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("(not infinitesimally rigid)"));
}

#[test]
fn sotomayor_and_spectrum_scenarios() {
    let dir = TempDir::new().unwrap();
    let out = run_in(&dir, &scenario("sotomayor_s0.json"), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("verdict: transcritical"));
    let out = run_in(&dir, &scenario("fig2_spectrum.json"), &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("fig2_spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn simulation_settles() {
    let dir = TempDir::new().unwrap();
    let out = run_in(&dir, &scenario("simulate.json"), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("outcome: settled away from the design"));
}

#[test]
fn malformed_edge_index() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        r#"{{ "format": 1,
             "graph": {{ "vertices": 4, "edges": [[1, 2], [2, 3], [3, 1], [4, 3], [1, 4], [9, 2]] }},
             {LENGTHS}, {LAW}, "experiment": {{ "kind": "census" }} }}"#
    );
    let out = run_in(&dir, &write_scenario(&dir, "bad.json", &body), &[]);
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["error"]["code"], "edge_index");
    assert_eq!(rec["error"]["exit_code"], 2);
    assert_eq!(rec["error"]["message"], "edge 6 references vertex 9 of 4");
}

#[test]
fn validation_failures_have_distinct_codes() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("syntax.json", "{ \"format\": 1,\n  \"graph\": oops }".to_string(), "parse"),
        (
            "law.json",
            format!(r#"{{ "format": 1, {TWO_CYCLES}, {LENGTHS}, "law": {{ "name": "magic" }}, "experiment": {{ "kind": "census" }} }}"#),
            "unknown_law",
        ),
        (
            "infeasible.json",
            format!(
                r#"{{ "format": 1, {TWO_CYCLES}, "lengths": {{ "values": [1, 4, 9, 1, 1], "convention": "squared" }}, {LAW}, "experiment": {{ "kind": "spectrum" }} }}"#
            ),
            "infeasible",
        ),
        (
            "convention.json",
            format!(
                r#"{{ "format": 1, {TWO_CYCLES}, "lengths": {{ "values": [1, 1, 1, 1, 1], "convention": "plain" }}, {LAW}, "experiment": {{ "kind": "census" }} }}"#
            ),
            "convention",
        ),
        (
            "version.json",
            format!(r#"{{ "format": 2, {TWO_CYCLES}, {LENGTHS}, {LAW}, "experiment": {{ "kind": "census" }} }}"#),
            "format",
        ),
        (
            "count.json",
            format!(
                r#"{{ "format": 1, {TWO_CYCLES}, {LENGTHS}, {LAW}, "experiment": {{ "kind": "rigidity", "positions": [[0, 0]] }} }}"#
            ),
            "invalid",
        ),
    ];
    for (name, body, code) in cases {
        let out = run_in(&dir, &write_scenario(&dir, name, &body), &[]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert_eq!(error_record(&out)["error"]["code"], code, "{name}");
    }
    let missing = dir.path().join("missing.json");
    let out = run_in(&dir, &missing, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["error"]["code"], "read");
}

#[test]
fn parse_errors_carry_a_position() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "syntax.json", "{ \"format\": 1,\n  \"graph\": oops }");
    let out = run_in(&dir, &path, &[]);
    let msg = error_record(&out)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains("syntax.json:2:"), "{msg}");
}

#[test]
fn non_equilibrium_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        r#"{{ "format": 1, {TWO_CYCLES}, {LENGTHS}, {LAW},
             "experiment": {{ "kind": "spectrum", "positions": [[0, 0], [1, 0], [0.5, 1], [-1, 0.3]] }} }}"#
    );
    let out = run_in(&dir, &write_scenario(&dir, "off.json", &body), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_record(&out)["error"]["code"], "not_equilibrium");
}
