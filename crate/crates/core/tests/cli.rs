//! The `quantrans` binary: output shapes and exit codes.

use std::path::PathBuf;
use std::process::Command;

fn programs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/programs")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_quantrans")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn path(name: &str) -> String {
    programs().join(name).display().to_string()
}

#[test]
fn transform_reports_convergence() {
    let (code, out, _) = run(&["transform", &path("loop_flow.ngcl"), "--mode", "sp", "--quantity", "hi"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "min([lo >= hi], hi - 5)  (converged at 2 iterations)");
}

#[test]
fn truncated_transform_exits_unknown() {
    let (code, out, _) = run(&[
        "transform",
        &path("loop_flow.ngcl"),
        "--mode",
        "wp",
        "--quantity",
        "[lo = 4]",
        "--fuel",
        "8",
        "--format",
        "table",
    ]);
    assert_eq!(code, 2);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("mode,quantity,status,iterations"));
    assert!(lines.next().unwrap().ends_with(",truncated_lower,8"), "{out}");
}

#[test]
fn diverge_is_exact() {
    let (code, out, _) = run(&["transform", &path("diverge.ngcl"), "--mode", "wlp", "--quantity", "x"]);
    assert_eq!((code, out.trim()), (0, "+inf  (exact)"));
}

#[test]
fn annotate_marks_every_point() {
    let (code, out, _) = run(&["annotate", &path("branch_flow.ngcl"), "--mode", "sp", "--quantity", "hi"]);
    assert_eq!(code, 0);
    assert!(out.lines().filter(|l| l.trim_start().starts_with("// {{")).count() >= 3, "{out}");
}

#[test]
fn oracle_agrees_on_branch_flow() {
    let (code, out, _) = run(&[
        "oracle",
        &path("branch_flow.ngcl"),
        "--mode",
        "slp",
        "--quantity",
        "hi",
        "--domain",
        "hi=-2..12; lo=0..127",
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("pass"), "{out}");
}

#[test]
fn triple_file_holds() {
    let (code, out, _) = run(&["check", &path("step_four.triple"), "--domain", "x=-8..24"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().last(), Some("holds"));
    assert_eq!(out.matches(": holds").count(), 2, "{out}");
}

#[test]
fn failing_induction_exits_three() {
    let (code, out, _) = run(&[
        "check",
        "--induction",
        "slp",
        "--program",
        &path("step_four.ngcl"),
        "-f",
        "[x = 13]",
        "-g",
        "[x % 4 = 0]",
        "--invariant",
        "[x % 4 = 0]",
        "--domain",
        "x=-8..24",
    ]);
    assert_eq!(code, 3, "{out}");
    assert!(out.lines().last().unwrap().starts_with("fails at"), "{out}");
}

#[test]
fn one_shot_and_galois() {
    let (code, out, _) = run(&[
        "check",
        "--one-shot",
        "sp",
        "--program",
        &path("loop_flow.ngcl"),
        "-g",
        "hi",
        "--domain",
        "hi=-4..12; lo=-4..12",
    ]);
    // the program opens with an assignment; the rule needs a bare loop
    assert_eq!(code, 2, "{out}");
    let (code, out, _) = run(&[
        "check",
        "--galois",
        "wlp-sp",
        "--program",
        &path("branch_flow.ngcl"),
        "-f",
        "[lo = 99]",
        "-g",
        "[hi > 7]",
        "--domain",
        "hi=-2..12; lo=0..127",
    ]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().last(), Some("holds"));
}

#[test]
fn leak_table() {
    let (code, out, _) = run(&[
        "leak",
        &path("branch_flow.ngcl"),
        "--secret",
        "hi",
        "--observable",
        "lo",
        "--domain",
        "hi=-2..12; lo=0..127",
        "--format",
        "table",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("\n80,interval,-2,7\n") && out.contains("\n99,interval,8,12\n"), "{out}");
}

#[test]
fn props_small_run() {
    let (code, out, _) = run(&["props", "--count", "6", "--suite", "duality"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.trim_end().ends_with("0 falsified"), "{out}");
}

#[test]
fn bad_input_exits_one() {
    let (code, _, err) = run(&["transform", &path("missing.ngcl"), "--mode", "sp", "--quantity", "x"]);
    assert_eq!(code, 1);
    assert!(err.contains("missing.ngcl"));
    let (code, _, err) = run(&["transform", &path("diverge.ngcl"), "--mode", "sp", "--quantity", "min(x"]);
    assert_eq!(code, 1);
    assert!(err.contains('^'), "{err}");
    let (code, _, _) = run(&["transform", &path("diverge.ngcl"), "--mode", "nope", "--quantity", "x"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 1);
}

#[test]
fn oracle_margin_keeps_the_edge_out() {
    let inc = path("increment.ngcl");
    for mode in ["wp", "wlp", "sp", "slp"] {
        let (code, out, _) = run(&["oracle", &inc, "--mode", mode, "--quantity", "x", "--domain", "x=0..7"]);
        assert_eq!(code, 0, "{mode}: {out}");
    }
    // Without a margin the run from x = 7 leaves the box.
    let (code, _, err) = run(&["oracle", &inc, "--mode", "sp", "--quantity", "x", "--domain", "x=0..7", "--margin", "0"]);
    assert_eq!(code, 1);
    assert!(err.contains("escapes"), "{err}");
}
