//! Command-level behavior: exit codes, output discipline, and the explain
//! subcommand, all via the installed binary.

use std::path::Path;
use std::process::Command;

fn repo_path(rel: &str) -> String {
    format!("{}/../../{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn fairadapt_in(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fairadapt"))
        .args(args)
        .current_dir(dir)
        .env("FAIRADAPT_COLOR", "0")
        .output()
        .expect("binary runs")
}

fn fairadapt(args: &[&str]) -> std::process::Output {
    fairadapt_in(Path::new(env!("CARGO_MANIFEST_DIR")), args)
}

fn stdout_of(out: &std::process::Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &std::process::Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn validate_accepts_the_bundled_model_silently() {
    let out = fairadapt(&["validate", &repo_path("scenarios/supermarket.frm")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "{}", stdout_of(&out));
    assert!(out.stderr.is_empty(), "{}", stderr_of(&out));
}

#[test]
fn validate_reports_an_unknown_field_path_with_code_and_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.frm");
    std::fs::write(
        &path,
        "stakeholder s kind = group\n\
         resource Shopper { age: int; }\n\
         requirement F \"f\" specified_by = s affects = [] leaf OF\n\
         operation OP for OF {\n  rule: Shoper.age > 1;\n  action: a set_field(path = Shopper.age, value = 1) writes [Shopper];\n}\n",
    )
    .unwrap();
    let out = fairadapt(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].contains("error[E021]"), "{err}");
    assert!(lines[0].contains("bad.frm:5:9"), "{err}");
    assert!(lines[0].contains("Shoper"), "{err}");
}

#[test]
fn unreadable_paths_exit_2_with_a_message_on_stderr() {
    for args in [
        vec!["validate", "/nonexistent/model.frm"],
        vec!["analyze", "/nonexistent/model.frm"],
        vec![
            "run",
            "/nonexistent/model.frm",
            "/nonexistent/timeline.scn",
        ],
    ] {
        let out = fairadapt(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(stderr_of(&out).contains("cannot read"), "{args:?}");
    }
}

#[test]
fn ndjson_outputs_are_one_json_object_per_line() {
    for args in [
        vec![
            "analyze".to_string(),
            repo_path("scenarios/supermarket.frm"),
            "--format".into(),
            "ndjson".into(),
        ],
        vec![
            "run".to_string(),
            repo_path("scenarios/supermarket_base.frm"),
            repo_path("scenarios/paper.scn"),
            "--format".into(),
            "ndjson".into(),
        ],
    ] {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = fairadapt(&args);
        assert_eq!(out.status.code(), Some(0));
        let text = stdout_of(&out);
        assert!(text.ends_with('\n'));
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).expect("valid JSON line");
            assert!(v.is_object());
        }
    }
}

#[test]
fn analyze_output_is_independent_of_declaration_order() {
    let text = std::fs::read_to_string(repo_path("scenarios/supermarket.frm")).unwrap();
    let chunks: Vec<&str> = text.split("\n\n").collect();
    let reversed = chunks.iter().rev().copied().collect::<Vec<_>>().join("\n\n");
    let dir = tempfile::tempdir().unwrap();
    let shuffled = dir.path().join("shuffled.frm");
    std::fs::write(&shuffled, reversed).unwrap();

    let a = fairadapt(&["analyze", &repo_path("scenarios/supermarket.frm"), "--format", "ndjson"]);
    let b = fairadapt(&["analyze", shuffled.to_str().unwrap(), "--format", "ndjson"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(stdout_of(&a), stdout_of(&b));
}

#[test]
fn run_reports_scenario_errors_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("bad.scn");
    std::fs::write(&scn, "at mon 09:00 add_item shopper=ghost item=none\n").unwrap();
    let out = fairadapt(&[
        "run",
        &repo_path("scenarios/supermarket_base.frm"),
        scn.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("E061"), "{}", stderr_of(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn run_exits_0_even_when_violations_occur() {
    // The full scenario contains violations and a rejected event; they are
    // data in the trace, not command failures.
    let out = fairadapt(&[
        "run",
        &repo_path("scenarios/supermarket_base.frm"),
        &repo_path("scenarios/paper.scn"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("conflict_explained"), "violations visible in the summary");
    assert!(text.contains("chose OR1_2 (score 0)"), "plan line names the chosen operation");
}

#[test]
fn seed_flag_is_accepted_and_changes_nothing() {
    let base = fairadapt(&[
        "run",
        &repo_path("scenarios/supermarket_base.frm"),
        &repo_path("scenarios/paper.scn"),
        "--format",
        "ndjson",
    ]);
    let seeded = fairadapt(&[
        "run",
        &repo_path("scenarios/supermarket_base.frm"),
        &repo_path("scenarios/paper.scn"),
        "--format",
        "ndjson",
        "--seed",
        "12345",
    ]);
    assert_eq!(base.status.code(), Some(0));
    assert_eq!(seeded.status.code(), Some(0));
    assert_eq!(base.stdout, seeded.stdout);
}

#[test]
fn explain_cites_the_conflict_that_excused_a_violation() {
    let out = fairadapt(&[
        "explain",
        &format!("{}/tests/golden/paper_trace.ndjson", env!("CARGO_MANIFEST_DIR")),
        "--model",
        &repo_path("scenarios/supermarket_base.frm"),
        "FR2",
        "54",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("conflict_explained"), "{text}");
    assert!(text.contains("explained by FR3"), "{text}");
    assert!(text.contains("priority 0"), "{text}");
    assert!(text.contains("Likely"), "{text}");
}

#[test]
fn explain_reports_an_unbound_requirement_as_idle() {
    // Iteration 33 is an enter event: FR2's rule needs an order, so nothing
    // binds and the requirement sits idle.
    let out = fairadapt(&[
        "explain",
        &format!("{}/tests/golden/paper_trace.ndjson", env!("CARGO_MANIFEST_DIR")),
        "--model",
        &repo_path("scenarios/supermarket_base.frm"),
        "FR2",
        "33",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("idle"), "{text}");
    assert!(text.contains("no rule bound this iteration"), "{text}");
}

#[test]
fn explain_lists_known_requirements_for_an_unknown_id() {
    let out = fairadapt(&[
        "explain",
        &format!("{}/tests/golden/paper_trace.ndjson", env!("CARGO_MANIFEST_DIR")),
        "--model",
        &repo_path("scenarios/supermarket_base.frm"),
        "FR99",
        "54",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("FR99"), "{err}");
    for known in ["FR0", "FR1", "FR2", "FR3"] {
        assert!(err.contains(known), "{err}");
    }
}

#[test]
fn explain_rejects_an_out_of_range_iteration() {
    let out = fairadapt(&[
        "explain",
        &format!("{}/tests/golden/paper_trace.ndjson", env!("CARGO_MANIFEST_DIR")),
        "--model",
        &repo_path("scenarios/supermarket_base.frm"),
        "FR2",
        "400",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("iteration 400"), "{}", stderr_of(&out));
}
