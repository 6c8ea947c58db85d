//! End-to-end runs of the `dirm` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dirm_opacity::fixtures;
use dirm_opacity::verify::{Status, Verdict};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.json"))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dirm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn dirm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirm"))
        .args(args)
        .output()
        .expect("dirm runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_fixture_files_match_the_embedded_ones() {
    for (name, doc) in fixtures::ALL {
        assert_eq!(std::fs::read_to_string(fixture(name)).unwrap(), *doc);
    }
}

#[test]
fn verify_figure1_reports_the_witness() {
    let o = dirm(&["verify", path_str(&fixture("fig1"))]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("status: violated"));
    assert!(text.contains("witness: haha"));
    assert!(text.contains("estimate: {4Y}"));
}

#[test]
fn verify_medical_cloud_is_opaque() {
    let o = dirm(&["verify", path_str(&fixture("medical_cloud"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("status: opaque\n"));
}

#[test]
fn project_and_history() {
    let fig1 = fixture("fig1");
    let o = dirm(&["project", path_str(&fig1), "--string", "h,a,h"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "h.a\n");
    let o = dirm(&["project", path_str(&fig1), "--string", "u,h"]);
    assert_eq!(stdout(&o), "eps\n");
    let o = dirm(&["history", path_str(&fig1), "--string", "u,h,a,h,a"]);
    assert_eq!(stdout(&o), "{eps, a, h.a.h, h.a.h.a}\n");
    let o = dirm(&["history", path_str(&fig1), "--string", "h,a", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["history"], serde_json::json!(["eps", "h", "h.a"]));
}

#[test]
fn estimate_figure2() {
    let o = dirm(&[
        "estimate",
        path_str(&fixture("fig2")),
        "--string",
        "h,h,a",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        v["augmented_estimate"],
        serde_json::json!(["6Y", "8N", "9N"])
    );
    assert_eq!(v["estimate"], serde_json::json!(["6", "8", "9"]));
    assert_eq!(v["observer_state"], "6Y | {6Y,8N,9N} | {6Y,8N,9N}");
}

#[test]
fn verify_json_round_trips() {
    let o = dirm(&["verify", "--json", path_str(&fixture("fig2"))]);
    assert_eq!(o.status.code(), Some(1));
    let verdict: Verdict = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(verdict.status, Status::Violated);
    assert_eq!(verdict.witness.as_deref().unwrap().join(""), "uhha");
    assert_eq!(format!("{}\n", verdict.to_json()), stdout(&o));
}

#[test]
fn duplicate_event_is_a_partition_error() {
    let broken = scratch(
        "broken.json",
        r#"{
  "states": ["0", "1"],
  "events": {"a": "o", "a": "r"},
  "initial": "0",
  "transitions": [["0", "a", "1"]],
  "release_states": [],
  "secret_states": ["1"]
}"#,
    );
    let o = dirm(&["validate", path_str(&broken)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("partition violation"));
}

#[test]
fn fixtures_validate() {
    for name in ["fig2", "medical_cloud"] {
        let o = dirm(&["validate", path_str(&fixture(name))]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("no findings"), "{name}");
    }
    // The first worked example has releasable events entering release
    // states, so it validates with warnings.
    let o = dirm(&["validate", path_str(&fixture("fig1"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("warning: no-immediate-release violated"));
}

#[test]
fn immediate_release_needs_opting_in() {
    let mut g = fixtures::figure1();
    g.set_allow_immediate_release(false);
    let strict = scratch("fig1_strict.json", &g.to_document());
    assert_eq!(
        dirm(&["validate", path_str(&strict)]).status.code(),
        Some(2)
    );
    assert_eq!(dirm(&["verify", path_str(&strict)]).status.code(), Some(2));
    let o = dirm(&["verify", "--allow-immediate-release", path_str(&strict)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn resource_cap_exits_3() {
    let o = dirm(&[
        "observer",
        path_str(&fixture("medical_cloud")),
        "--max-observer-states",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(dirm(&[]).status.code(), Some(2));
    assert_eq!(dirm(&["verify"]).status.code(), Some(2));
    assert_eq!(
        dirm(&["verify", "/does/not/exist.json"]).status.code(),
        Some(2)
    );
    let o = dirm(&["project", path_str(&fixture("fig1")), "--string", "a,a"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dot_export_is_written_and_stable() {
    let fig2 = fixture("fig2");
    let first = dirm(&["export-dot", path_str(&fig2), "--graph", "observer"]);
    let second = dirm(&["export-dot", path_str(&fig2), "--graph", "observer"]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first).starts_with("digraph \"observer\""));

    let target = scratch("aug.dot", "");
    let o = dirm(&["augment", path_str(&fig2), "--dot", path_str(&target)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("11 augmented states"));
    let dot = std::fs::read_to_string(&target).unwrap();
    assert!(dot.contains("label=\"7Y\", shape=doublecircle"));
}

#[test]
fn augment_json_is_a_model_document() {
    let o = dirm(&["augment", "--json", path_str(&fixture("fig2"))]);
    let g = dirm_opacity::parse_model(&stdout(&o)).unwrap();
    assert!(g.is_augmented());
    assert_eq!(g.num_states(), 11);
}

#[test]
fn oracle_check_on_fixtures() {
    for name in ["fig1", "fig2", "medical_cloud"] {
        let o = dirm(&[
            "oracle-check",
            path_str(&fixture(name)),
            "--bound",
            "6",
            "--json",
        ]);
        assert_eq!(o.status.code(), Some(0), "{name}");
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["mismatches"], serde_json::json!([]));
    }
}

#[test]
fn observer_listing() {
    let o = dirm(&["observer", path_str(&fixture("fig2"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("7Y | {7Y} | {7Y} *"));
}
