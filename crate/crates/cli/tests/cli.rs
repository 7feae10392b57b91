use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use zerorays::CountResult;
use zerorays_cli::{render, RefineReport, SweepTable};

const CIRCLE: &str = r#"{"n":1,"degrees":[2],"polys":[[{"J":[2,0],"c":1},{"J":[0,2],"c":1}]]}"#;
const TWO_LINES: &str =
    r#"{"n":1,"degrees":[2],"polys":[[{"J":[0,2],"c":1},{"J":[2,0],"c":-0.25}]]}"#;
const DOUBLE_ROOT: &str = r#"{"n":1,"degrees":[2],"polys":[[{"J":[0,2],"c":1}]]}"#;
const TILTED_LINE: &str =
    r#"{"n":1,"degrees":[1],"polys":[[{"J":[0,1],"c":1},{"J":[1,0],"c":-0.1}]]}"#;
// a plane through the origin against a quadric cone
const PLANE_PAIR: &str = r#"{"n":2,"degrees":[1,2],"polys":[
  [{"J":[1,0,0],"c":0.3},{"J":[0,1,0],"c":-0.8},{"J":[0,0,1],"c":0.5}],
  [{"J":[2,0,0],"c":0.5},{"J":[0,2,0],"c":-1},{"J":[0,0,2],"c":0.4},{"J":[1,1,0],"c":0.2}]
]}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn zerorays(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zerorays"))
        .args(args)
        .output()
        .unwrap()
}

fn count(input: &Path, extra: &[&str]) -> (i32, String) {
    let mut args = vec!["count", "--input", input.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = zerorays(&args);
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
    )
}

#[test]
fn count_examples_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, doc) = count(&write(dir.path(), "circle.json", CIRCLE), &[]);
    let v: Value = serde_json::from_str(&doc).unwrap();
    assert_eq!(
        (code, v["count"].as_u64(), v["status"].as_str()),
        (0, Some(0), Some("converged"))
    );

    let lines = write(dir.path(), "twolines.json", TWO_LINES);
    for extra in [&[][..], &["--mode", "rounded", "--bits", "24"][..]] {
        let (code, doc) = count(&lines, extra);
        let v: Value = serde_json::from_str(&doc).unwrap();
        assert_eq!((code, v["count"].as_u64()), (0, Some(2)), "{extra:?}");
        for key in [
            "iterations",
            "components",
            "kappa_lower_bound",
            "original_norm",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    let (code, doc) = count(
        &write(dir.path(), "double.json", DOUBLE_ROOT),
        &["--max-iter", "10"],
    );
    let v: Value = serde_json::from_str(&doc).unwrap();
    assert_eq!(
        (code, v["status"].as_str()),
        (2, Some("iteration-cap-reached"))
    );
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        write(dir.path(), "garbage.json", "not json"),
        write(
            dir.path(),
            "unknown.json",
            r#"{"n":1,"degrees":[1],"polys":[[{"J":[1,0],"c":1}]],"extra":3}"#,
        ),
        write(
            dir.path(),
            "shape.json",
            r#"{"n":2,"degrees":[1],"polys":[[{"J":[1,0,0],"c":1}]]}"#,
        ),
        dir.path().join("missing.json"),
    ];
    for path in &cases {
        let out = zerorays(&["count", "--input", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{path:?}");
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let lines = write(dir.path(), "twolines.json", TWO_LINES);
    let out = zerorays(&[
        "count",
        "--input",
        lines.to_str().unwrap(),
        "--mode",
        "rounded",
        "--bits",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn result_documents_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("lines", TWO_LINES),
        ("plane", PLANE_PAIR),
        ("circle", CIRCLE),
    ] {
        let (_, doc) = count(&write(dir.path(), name, text), &[]);
        let parsed: CountResult = serde_json::from_str(&doc).unwrap();
        assert_eq!(render(&parsed), doc, "{name}");
    }
}

#[test]
fn output_flag_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let lines = write(dir.path(), "twolines.json", TWO_LINES);
    let target = dir.path().join("out.json");
    let out = zerorays(&[
        "count",
        "--input",
        lines.to_str().unwrap(),
        "--output",
        target.to_str().unwrap(),
        "--trace",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    let traced = String::from_utf8(out.stderr).unwrap();
    assert_eq!(
        traced.lines().count(),
        doc["iterations"].as_array().unwrap().len()
    );
    for line in traced.lines() {
        assert!(serde_json::from_str::<Value>(line)
            .unwrap()
            .get("k")
            .is_some());
    }
}

#[test]
fn worker_count_is_invisible() {
    let dir = tempfile::tempdir().unwrap();
    let plane = write(dir.path(), "plane.json", PLANE_PAIR);
    let (_, one) = count(&plane, &["--workers", "1"]);
    let (_, four) = count(&plane, &["--workers", "4"]);
    assert_eq!(one, four);
    let v: Value = serde_json::from_str(&one).unwrap();
    assert!(v["count"].as_u64().is_some());
}

#[test]
fn refine_examples() {
    let dir = tempfile::tempdir().unwrap();
    let line = write(dir.path(), "line.json", TILTED_LINE);
    let run = |start: &str| {
        let out = zerorays(&[
            "refine",
            "--input",
            line.to_str().unwrap(),
            "--start",
            start,
        ]);
        assert_eq!(out.status.code(), Some(0));
        let report: RefineReport = serde_json::from_slice(&out.stdout).unwrap();
        (report, String::from_utf8(out.stderr).unwrap())
    };

    let (r, _) = run("1,0");
    let s = 1.01f64.sqrt();
    assert!((r.zero[0] - 1.0 / s).abs() < 1e-12 && (r.zero[1] - 0.1 / s).abs() < 1e-12);
    assert_eq!(r.envelope, zerorays_cli::Envelope::Satisfied);

    let exact = format!("{},{}", 1.0 / s, 0.1 / s);
    let (r, _) = run(&exact);
    assert_eq!(r.steps, 0);
    assert!(r.trace.len() == 1 && r.trace[0] < 1e-15);

    // orthogonal to the zero
    let (r, warn) = run("-0.0995037190209989,0.9950371902099892");
    assert!(r.warnings.iter().any(|w| w == "uncertified start"));
    assert!(warn.contains("uncertified start"));

    let out = zerorays(&[
        "refine",
        "--input",
        line.to_str().unwrap(),
        "--start",
        "1,1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn kappa_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let lines = write(dir.path(), "twolines.json", TWO_LINES);
    let out = zerorays(&["kappa", "--input", lines.to_str().unwrap(), "--level", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["kappa_lower_bound"].as_f64().unwrap() >= 1.0);

    let out = zerorays(&[
        "sweep",
        "--input",
        lines.to_str().unwrap(),
        "--bits",
        "53,24,3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let table: SweepTable = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(table.exact_count, Some(2));
    assert!(table.rows[0].agrees_with_exact && table.rows[1].agrees_with_exact);
    assert_eq!(table.rows[2].bits, 3);
    assert!(!table.rows[2].within_bound);

    let out = zerorays(&["sweep", "--input", lines.to_str().unwrap(), "--bits", ""]);
    assert_eq!(out.status.code(), Some(0));
    let table: SweepTable = serde_json::from_slice(&out.stdout).unwrap();
    assert!(table.rows.is_empty());
}
