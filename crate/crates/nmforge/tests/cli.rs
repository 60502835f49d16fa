//! End-to-end checks of the command-line interface against the scenario
//! files shipped in the repository.

use std::path::PathBuf;
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn nmforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmforge"))
        .args(args)
        .output()
        .expect("the binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn verify_canonical_scenario_passes() {
    let out = nmforge(&[
        "verify",
        "--suite",
        "all",
        "--scenario",
        scenario("canonical.json").to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(out.status.success(), "exit failure:\n{text}");
    assert!(text.contains("summary: 7/7 checks passed"), "{text}");
    assert!(!text.contains("[FAIL]"), "{text}");
}

#[test]
fn verify_lifted_scenario_passes() {
    let out = nmforge(&[
        "verify",
        "--suite",
        "all",
        "--scenario",
        scenario("lifted.json").to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(out.status.success(), "exit failure:\n{text}");
    assert!(text.contains("summary: 4/4 checks passed"), "{text}");
}

#[test]
fn verify_seeded_json_output_is_machine_readable() {
    let out = nmforge(&[
        "verify", "--suite", "doob", "--seeds", "0..5", "--format", "json",
    ]);
    assert!(out.status.success());
    let reports: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    let checks = reports[0]["checks"].as_array().expect("checks array");
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn rep_tabulates_the_canonical_function() {
    let out = nmforge(&[
        "rep",
        "--scenario",
        scenario("canonical.json").to_str().unwrap(),
        "--function",
        "f",
    ]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("stabilization level: 1"), "{text}");
    let a_row = text
        .lines()
        .find(|l| l.starts_with('a'))
        .expect("row for a");
    assert!(a_row.contains('1') && a_row.ends_with('*'), "{a_row}");
}

#[test]
fn weakstar_reports_the_pinned_gap_sequence() {
    let out = nmforge(&[
        "weakstar",
        "--scenario",
        scenario("canonical.json").to_str().unwrap(),
        "--probes",
        "v",
        "--exponent",
        "2",
    ]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    let level0 = text.lines().find(|l| l.starts_with("0 ")).expect("level 0");
    assert!(level0.contains("1/4"), "{level0}");
    assert!(
        text.contains("final approximant equals the section: yes"),
        "{text}"
    );
}

#[test]
fn dual_of_pullback_reports_the_isomorphism() {
    let out = nmforge(&[
        "dual-of-pullback",
        "--scenario",
        scenario("canonical.json").to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("route fibers identical: yes"), "{text}");
    assert!(text.contains("isomorphism verdict: PASS"), "{text}");
}

#[test]
fn lift_atoms_prints_the_partition() {
    let out = nmforge(&[
        "lift",
        "--scenario",
        scenario("lifted.json").to_str().unwrap(),
        "--what",
        "atoms",
    ]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("{a, c}"), "{text}");
    assert!(text.contains("{b}"), "{text}");
}

#[test]
fn unknown_suite_fails_with_usage_error() {
    let out = nmforge(&["verify", "--suite", "bogus", "--seeds", "0..5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("bogus"), "{err}");
}

#[test]
fn missing_scenario_objects_are_reported() {
    let out = nmforge(&[
        "verify",
        "--suite",
        "doob",
        "--scenario",
        scenario("lifted.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("chain"), "{err}");
}
