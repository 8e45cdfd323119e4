//! End-to-end tests of the `verify` binary: exit codes, report formats,
//! determinism, and error handling.

use std::io::Write as _;
use std::process::{Command, Output};

const OVERLAY: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../overlays/null-plane.overlay");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_str(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("stdout is utf-8")
}

fn err_str(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("stderr is utf-8")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("no signal")
}

#[test]
fn clean_suite_exits_zero() {
    let o = run(&["suite", "--presentation", "kappa-new", "--checks", "jacobi"]);
    assert_eq!(code(&o), 0, "{}", err_str(&o));
    let text = out_str(&o);
    assert!(text.contains("summary: 286 passed, 0 failed, 0 overlay-passed"), "{text}");
}

#[test]
fn printed_defects_exit_one_with_residuals() {
    let o = run(&["suite", "--presentation", "null-plane", "--checks", "jacobi"]);
    assert_eq!(code(&o), 1);
    let text = out_str(&o);
    assert!(text.contains("summary: 273 passed, 13 failed, 0 overlay-passed"), "{text}");
    assert!(text.contains("jacobi/null-plane/E1.E2.F1  fail  residual: "), "{text}");
}

#[test]
fn overlay_passes_count_only_when_accepted() {
    let without = run(&[
        "suite", "--presentation", "null-plane", "--checks", "jacobi", "--overlay", OVERLAY,
    ]);
    assert_eq!(code(&without), 1, "overlay rescues must still fail the run unless accepted");
    let text = out_str(&without);
    assert!(text.contains("summary: 273 passed, 0 failed, 13 overlay-passed"), "{text}");
    assert!(text.contains("fail-with-overlay-pass"), "{text}");
    assert!(text.contains("residual: "), "rescued checks keep their printed residuals");

    let with = run(&[
        "suite", "--presentation", "null-plane", "--checks", "jacobi", "--overlay", OVERLAY,
        "--accept-overlay",
    ]);
    assert_eq!(code(&with), 0, "{}", err_str(&with));
}

#[test]
fn config_and_parse_errors_exit_two() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["suite", "--presentation", "marzipan"],
        vec!["suite", "--checks", "jacobi,frobnicate"],
        vec!["suite", "--checks", " , "],
        vec!["suite", "--map", "warp"],
        vec!["suite", "--metric", "euclidean"],
        vec!["suite", "--overlay", "/nonexistent/overlay.txt"],
        vec!["eval", "M1 +", "--presentation", "kappa-new"],
        vec!["eval", "M1", "--presentation", "marzipan"],
    ];
    for args in cases {
        let o = run(&args);
        assert_eq!(code(&o), 2, "args {args:?}: {}", out_str(&o));
        assert!(err_str(&o).starts_with("error: "), "args {args:?}");
        assert!(o.stdout.is_empty(), "errors must not emit a report: {args:?}");
    }

    let mut bad_overlay = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad_overlay, "[null-plane]\ncommutator Q9 F2 = J3 ; because").unwrap();
    let o = run(&[
        "suite",
        "--presentation",
        "null-plane",
        "--overlay",
        bad_overlay.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    let err = err_str(&o);
    assert!(err.contains("line 2") && err.contains("Q9"), "{err}");
}

#[test]
fn json_report_has_the_documented_shape() {
    let o = run(&[
        "suite", "--presentation", "null-plane", "--checks", "jacobi", "--overlay", OVERLAY,
        "--accept-overlay", "--format", "json",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&out_str(&o)).expect("valid json");
    assert!(v["version"].is_string());
    assert_eq!(v["config"]["presentations"], serde_json::json!(["null-plane"]));
    assert_eq!(v["config"]["checks"], serde_json::json!(["jacobi"]));
    assert_eq!(v["config"]["accept_overlay"], serde_json::json!(true));
    assert_eq!(v["summary"]["pass"], serde_json::json!(273));
    assert_eq!(v["summary"]["fail"], serde_json::json!(0));
    assert_eq!(v["summary"]["overlay"], serde_json::json!(13));
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 286);
    for c in checks {
        assert!(c["id"].is_string());
        assert_eq!(c["target"], serde_json::json!("null-plane"));
        assert!(c["ms"].is_u64());
        let status = c["status"].as_str().unwrap();
        let residual = c["residual"].as_str().unwrap();
        match status {
            "pass" => assert!(residual.is_empty()),
            "fail-with-overlay-pass" => assert!(!residual.is_empty()),
            other => panic!("unexpected status '{other}' in an accepted run"),
        }
    }
}

#[test]
fn full_suite_runs_are_byte_identical() {
    let args = [
        "suite", "--map", "all", "--overlay", OVERLAY, "--accept-overlay", "--format", "json",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code(&first), 0, "{}", err_str(&first));
    assert_eq!(first.stdout, second.stdout);

    let text_args = ["suite", "--map", "all", "--overlay", OVERLAY, "--accept-overlay"];
    let t1 = run(&text_args);
    let t2 = run(&text_args);
    assert_eq!(code(&t1), 0);
    assert_eq!(t1.stdout, t2.stdout);
}

#[test]
fn metric_files_work_like_presets() {
    let mut metric = tempfile::NamedTempFile::new().unwrap();
    writeln!(metric, "1 0 0 0\n0 -1 0 0\n0 0 -1 0\n0 0 0 -1").unwrap();
    let file_arg = format!("file:{}", metric.path().display());
    let from_file = run(&[
        "suite", "--presentation", "kappa-new", "--checks", "jacobi", "--metric", &file_arg,
    ]);
    let preset = run(&[
        "suite", "--presentation", "kappa-new", "--checks", "jacobi", "--metric", "minkowski",
    ]);
    assert_eq!(code(&from_file), 0, "{}", err_str(&from_file));
    assert_eq!(code(&preset), 0);
    // Identical check lines; only the config echo differs.
    let body = |o: &Output| {
        out_str(o)
            .lines()
            .filter(|l| !l.starts_with("metric: "))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&from_file), body(&preset));

    let mut short = tempfile::NamedTempFile::new().unwrap();
    writeln!(short, "1 2 3").unwrap();
    let o = run(&[
        "suite",
        "--metric",
        &format!("file:{}", short.path().display()),
    ]);
    assert_eq!(code(&o), 2);
    assert!(err_str(&o).contains("16"), "{}", err_str(&o));
}

#[test]
fn eval_prints_the_canonical_form() {
    let o = run(&["eval", "[M1,M2]", "--presentation", "kappa-new"]);
    assert_eq!(code(&o), 0);
    assert_eq!(out_str(&o), "i*g13*M1 + i*g23*M2 + i*g33*M3\n");

    let o = run(&["eval", "[M1,M2]", "--presentation", "kappa-new", "--metric", "minkowski"]);
    assert_eq!(out_str(&o), "-i*M3\n");

    let o = run(&["eval", "E + E^-1", "--presentation", "kappa-original"]);
    assert_eq!(out_str(&o), "2*cosh(z*P0)\n");
}

#[test]
fn list_names_everything_configurable() {
    let o = run(&["list"]);
    assert_eq!(code(&o), 0);
    let text = out_str(&o);
    for needle in [
        "kappa-original",
        "kappa-new",
        "null-plane",
        "basis-change",
        "null-iso",
        "jacobi",
        "hopf-axioms",
        "delta-morphism",
        "antipode-antimorphism",
        "antipode-equivalence",
        "map-morphism",
        "generic, null, minkowski, file:PATH",
    ] {
        assert!(text.contains(needle), "missing '{needle}' in:\n{text}");
    }
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = run(&[
        "suite", "--presentation", "kappa-original", "--checks", "hopf-axioms", "--format",
        "json", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty(), "with --out the report goes to the file only");
    let piped = run(&[
        "suite", "--presentation", "kappa-original", "--checks", "hopf-axioms", "--format",
        "json",
    ]);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), out_str(&piped));

    let o = run(&[
        "suite", "--presentation", "kappa-original", "--checks", "hopf-axioms", "--out",
        "/nonexistent/dir/report.txt",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn timings_are_off_by_default_and_optional() {
    let o = run(&["suite", "--presentation", "kappa-new", "--checks", "antipode-equivalence"]);
    let v = run(&[
        "suite", "--presentation", "kappa-new", "--checks", "antipode-equivalence", "--format",
        "json",
    ]);
    assert!(out_str(&o).contains("timings: off"));
    let parsed: serde_json::Value = serde_json::from_str(&out_str(&v)).unwrap();
    assert!(parsed["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["ms"] == serde_json::json!(0)));

    let t = run(&[
        "suite", "--presentation", "kappa-new", "--checks", "antipode-equivalence", "--timings",
    ]);
    assert!(out_str(&t).contains("timings: on"));
    assert!(out_str(&t).contains(" ms"));
}
