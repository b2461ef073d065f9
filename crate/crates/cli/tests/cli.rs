//! End-to-end tests of the command-line surface, driving the built binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn belltax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_belltax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn tmp(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    p.push(name);
    p.to_string_lossy().into_owned()
}

#[test]
fn threshold_reports_the_published_values() {
    let out = belltax(&["threshold", "--triple", "0.375,0.125,0.125"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("violated"), "{text}");
    assert!(text.contains("epsilon_max = 0.048318"), "{text}");
    assert!(text.contains("1.128029e-4"), "{text}");
    assert!(text.contains("0.99989"), "{text}");
}

#[test]
fn threshold_assertions_drive_the_exit_code() {
    let ok = belltax(&["threshold", "--triple", "0.375,0.125,0.125", "--assert", "violated"]);
    assert_eq!(ok.status.code(), Some(0));
    let fail =
        belltax(&["threshold", "--triple", "0.375,0.125,0.125", "--assert", "not-violated"]);
    assert_eq!(fail.status.code(), Some(1));
    let trivial = belltax(&["threshold", "--triple", "0,0,0", "--assert", "not-violated"]);
    assert_eq!(trivial.status.code(), Some(0));
}

#[test]
fn construct_then_classify_round_trip() {
    let path = tmp("h29.json");
    let out = belltax(&["construct", "--name", "h29-perfect", "--out", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = belltax(&["classify", "--in", &path]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "H29a local");
}

#[test]
fn classify_the_violating_witness() {
    let path = tmp("h14.json");
    assert!(belltax(&["construct", "--name", "h14-violating", "--out", &path])
        .status
        .success());
    let out = belltax(&["classify", "--in", &path, "--partition", "alpha"]);
    assert_eq!(stdout(&out).trim(), "H14a strong");
    // saving is exact: loading back and saving again is byte-identical
    let first = std::fs::read_to_string(&path).unwrap();
    let reparsed = belltax::jsonio::load_distribution(&first).unwrap();
    let second = belltax::jsonio::save_distribution(&reparsed);
    assert_eq!(first, second);
}

#[test]
fn check_reports_autonomy_and_contextuality() {
    let path = tmp("h10.json");
    assert!(belltax(&[
        "construct",
        "--name",
        "h10-nearly-perfect",
        "--delta",
        "0.001",
        "--out",
        &path
    ])
    .status
    .success());
    let out = belltax(&["check", "--in", &path, "--assert", "autonomy"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("H10a"), "{text}");
    assert!(text.contains("epsilon"), "{text}");
    // the nearly perfect family is strongly non-local in both partitions
    let out = belltax(&["check", "--in", &path, "--assert", "pbc"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn quantum_constructor_matches_entanglement() {
    let path = tmp("qm.json");
    assert!(belltax(&[
        "construct",
        "--name",
        "quantum",
        "--a-settings",
        "0,30,60",
        "--b-settings",
        "0,30,60,90",
        "--out",
        &path
    ])
    .status
    .success());
    let out = belltax(&["classify", "--in", &path, "--assert", "H7a"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    // away from maximal entanglement the class moves and the file is float
    let path_p = tmp("qm03.json");
    assert!(belltax(&[
        "construct",
        "--name",
        "quantum",
        "--p",
        "0.3",
        "--a-settings",
        "0,30,60",
        "--b-settings",
        "0,30,60,90",
        "--out",
        &path_p
    ])
    .status
    .success());
    let out = belltax(&["classify", "--in", &path_p, "--assert", "H3a"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn verify_structural_classes_is_instant_and_deterministic() {
    let run = || {
        let out = belltax(&[
            "verify",
            "--class",
            "H17a",
            "--regime",
            "strict",
            "--assert",
            "inconsistent",
        ]);
        (out.status.code(), stdout(&out))
    };
    let (code1, text1) = run();
    let (code2, text2) = run();
    assert_eq!(code1, Some(0));
    assert_eq!(text1, text2);
    assert!(text1.contains("omits setting"), "{text1}");

    let out = belltax(&[
        "verify", "--class", "H16a", "--regime", "strict", "--assert", "inconsistent",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("reducing the form to H29a"), "{}", stdout(&out));
}

#[test]
fn verify_witness_class_with_small_budget() {
    let out = belltax(&[
        "verify",
        "--class",
        "H14a",
        "--regime",
        "strict",
        "--restarts",
        "3",
        "--seed",
        "5",
        "--assert",
        "can-violate",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("witness: classifies H14a"), "{text}");
}

#[test]
fn seed_env_variable_is_honored() {
    let out = Command::new(env!("CARGO_BIN_EXE_belltax"))
        .args(["verify", "--class", "H14a", "--regime", "strict", "--restarts", "3", "--json"])
        .env("BELLTAX_SEED", "5")
        .output()
        .unwrap();
    assert!(out.status.success());
    let direct = belltax(&[
        "verify", "--class", "H14a", "--regime", "strict", "--restarts", "3", "--seed", "5",
        "--json",
    ]);
    assert_eq!(stdout(&out), stdout(&direct));
}

#[test]
fn malformed_input_exits_2_with_context() {
    let path = tmp("broken.json");
    std::fs::write(&path, "{\"a_settings\": [0],").unwrap();
    let out = belltax(&["classify", "--in", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "{err}");

    let out = belltax(&["classify", "--in", "/nonexistent/x.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = belltax(&["verify", "--class", "H99a", "--regime", "strict"]);
    assert_eq!(out.status.code(), Some(2));

    // unknown flags are clap usage errors
    let out = belltax(&["classify", "--nope"]);
    assert_eq!(out.status.code(), Some(2));
}
