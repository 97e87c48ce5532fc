//! End-to-end runs of the `treegen` binary on the six-vertex example tree.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

const SAMPLE: &str = "6\n0 3 2 2 4 4\n-1 0 1 1 3 1\n";

fn treegen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treegen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Work {
        let w = Work {
            dir: tempfile::tempdir().unwrap(),
        };
        fs::write(w.path("sample.tree"), SAMPLE).unwrap();
        w
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn build(&self, kind: &str, d: &str, out: &str) {
        let o = treegen(&[
            "build",
            "--kind",
            kind,
            "--tree",
            &self.s("sample.tree"),
            "--m",
            "5",
            "--d",
            d,
            "--out",
            &self.s(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

#[test]
fn build_and_eval_substitution() {
    let w = Work::new();
    w.build("ts", "3", "ts.json");
    let o = treegen(&["eval", "--net", &w.s("ts.json"), "--x", "1,3,1,5,1,2"]);
    assert_eq!(stdout(&o).trim(), "5,2,7,1,4,9,6,4,9,10");
}

#[test]
fn zero_budget_is_rejected() {
    let w = Work::new();
    let o = treegen(&[
        "build",
        "--kind",
        "ts",
        "--tree",
        &w.s("sample.tree"),
        "--m",
        "5",
        "--d",
        "0",
        "--out",
        &w.s("x.json"),
    ]);
    assert_eq!(code(&o), 2);
    assert!(!w.path("x.json").exists());
}

#[test]
fn deletion_output_strip_and_trace() {
    let w = Work::new();
    w.build("td", "3", "td.json");
    let net = w.s("td.json");
    assert_eq!(
        stdout(&treegen(&["eval", "--net", &net, "--x", "1,3,0"])).trim(),
        "2,7,4,9,4,9,B,B,B,B"
    );
    let o = treegen(&[
        "eval", "--net", &net, "--x", "1,3,0", "--strip", "--trace", "p'",
    ]);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("2,7,4,9,4,9"));
    assert_eq!(lines.next(), Some("p' = 1,2,0,3,4,0,0,5,0,0,0,0,0,0,0,0"));
}

#[test]
fn locator_wire_on_substitution_network() {
    let w = Work::new();
    w.build("ts", "3", "ts.json");
    let o = treegen(&[
        "eval",
        "--net",
        &w.s("ts.json"),
        "--x",
        "1,3,0,1,1,1",
        "--trace",
        "p'",
    ]);
    assert!(stdout(&o).contains("p' = 1,2,0,3,4,0,0,5,0,0\n"));
}

#[test]
fn unified_example_output() {
    let w = Work::new();
    // The unified example tree has the same shape and labels over an alphabet of 10.
    let o = treegen(&[
        "build",
        "--kind",
        "te",
        "--tree",
        &w.s("sample.tree"),
        "--m",
        "10",
        "--d",
        "3",
        "--out",
        &w.s("te.json"),
    ]);
    assert!(o.status.success());
    let x =
        "0.30,0,0.38,0,0.46,0.55,0,0.60,0.88,0.66,0.75,0,0.55,0.87,0.03,0.02,0.45,0.09,0,0.70,0.50";
    let o = treegen(&["eval", "--net", &w.s("te.json"), "--x", x]);
    assert_eq!(stdout(&o).trim(), "B,B,B,B,5,3,2,6,16,12,4,14,13,15,B,B");
    let o = treegen(&[
        "eval",
        "--net",
        &w.s("te.json"),
        "--x",
        &x.replace("0.38", "0.385"),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_arity_is_an_input_error() {
    let w = Work::new();
    w.build("td", "3", "td.json");
    let o = treegen(&["eval", "--net", &w.s("td.json"), "--x", "1,3"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected 3 inputs"));
}

fn enumerate(w: &Work, extra: &[&str]) -> Output {
    let tree = w.s("sample.tree");
    let mut args = vec!["enumerate", "--tree", &tree, "--m", "5"];
    args.extend_from_slice(extra);
    treegen(&args)
}

#[test]
fn deletion_report_validates() {
    let w = Work::new();
    let report = w.s("td.report.json");
    let o = enumerate(&w, &["--kind", "td", "--d", "1", "--report", &report]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("ted 1   5"));
    let v = treegen(&[
        "validate",
        "--report",
        &report,
        "--tree",
        &w.s("sample.tree"),
        "--m",
        "5",
        "--d",
        "1",
    ]);
    assert_eq!(code(&v), 0, "{}", stdout(&v));
    assert!(stdout(&v).contains("0 missing, 0 extra"));
}

#[test]
fn tampered_report_fails_validation() {
    let w = Work::new();
    let report = w.s("td.report.json");
    assert!(
        enumerate(&w, &["--kind", "td", "--d", "1", "--report", &report])
            .status
            .success()
    );
    let text = fs::read_to_string(&report)
        .unwrap()
        .replace("\"3,2,7,2,4,9,7,8\"", "\"3,2,7,2,4,9,7,4,9,8,1,6\"");
    fs::write(&report, text).unwrap();
    let v = treegen(&[
        "validate",
        "--report",
        &report,
        "--tree",
        &w.s("sample.tree"),
        "--m",
        "5",
        "--d",
        "1",
    ]);
    assert_eq!(code(&v), 1);
    let out = stdout(&v);
    assert!(out.contains("3,2,7,2,4,9,7,4,9,8,1,6"), "{out}");
    assert!(out.contains("missing 3,2,7,2,4,9,7,8"), "{out}");
}

#[test]
fn pinned_insertion_matches_ball() {
    let w = Work::new();
    let report = w.s("ti.json");
    let o = enumerate(
        &w,
        &[
            "--kind", "ti", "--d", "1", "--labels", "2", "--jobs", "2", "--report", &report,
        ],
    );
    assert!(o.status.success());
    let v = treegen(&[
        "validate",
        "--report",
        &report,
        "--tree",
        &w.s("sample.tree"),
        "--m",
        "5",
        "--d",
        "1",
    ]);
    assert_eq!(code(&v), 0, "{}", stdout(&v));
}

#[test]
fn unified_report_skips_ball() {
    let w = Work::new();
    let report = w.s("te.json");
    assert!(enumerate(
        &w,
        &["--kind", "te", "--d", "1", "--labels", "2", "--report", &report]
    )
    .status
    .success());
    let v = treegen(&[
        "validate",
        "--report",
        &report,
        "--tree",
        &w.s("sample.tree"),
        "--m",
        "5",
        "--d",
        "1",
    ]);
    assert_eq!(code(&v), 0);
    assert!(stdout(&v).contains("ball: skipped"));
}

#[test]
fn oversized_sweep_is_a_resource_error() {
    let w = Work::new();
    let o = enumerate(&w, &["--kind", "te", "--d", "2", "--strategy", "full"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn stats_reports_equal_depth() {
    let w = Work::new();
    let mut args = vec![
        "stats".to_string(),
        "--kind".into(),
        "td".into(),
        "--d".into(),
        "2".into(),
    ];
    for (i, text) in [
        "4\n0 1 2 1\n-1 0 1 0\n",
        "7\n0 1 1 2 2 1 1\n-1 0 1 1 0 4 0\n",
        SAMPLE,
    ]
    .iter()
    .enumerate()
    {
        let p = w.path(&format!("t{i}.tree"));
        fs::write(&p, text).unwrap();
        args.extend(["--tree".into(), p.display().to_string()]);
    }
    let o = Command::new(env!("CARGO_BIN_EXE_treegen"))
        .args(&args)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).ends_with("constant depth per kind and d: yes\n"));
}

#[test]
fn ball_lists_deletions() {
    let w = Work::new();
    let o = treegen(&[
        "ball",
        "--tree",
        &w.s("sample.tree"),
        "--m",
        "5",
        "--d",
        "1",
        "--ops",
        "del",
        "--mode",
        "exactly",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 5);
}
