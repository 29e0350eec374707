//! End-to-end checks of the binary: exit codes, JSON schemas, determinism.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shilov")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn maslov_circle_values() {
    let out = run(&["maslov", "0/1", "1/2", "3/4"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("= 1"));
    let out = run(&["maslov", "0/1", "1/2", "1/4"]);
    assert!(stdout(&out).contains("= -1"));
}

#[test]
fn classify_triple_from_turns() {
    let out = run(&["classify-triple", "--point", "0/1", "--point", "1/2", "--point", "3/4", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["tuple"]["N"], serde_json::json!([0, 0, 0, 0, 1]));
    assert_eq!(v["invariant"]["iota"], 1);
}

#[test]
fn classify_equal_triple_is_diagonal_orbit() {
    let out = run(&["classify-triple", "--point", "1/3,1/7", "--point", "1/3,1/7", "--point", "1/3,1/7", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["tuple"]["N"], serde_json::json!([2, 2, 2, 2, 2]));
}

#[test]
fn enumerate_counts() {
    for (r, count) in [("1", 6u64), ("2", 21), ("3", 56)] {
        let out = run(&["enumerate", "--rank", r, "--format", "json"]);
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(v["count"], serde_json::json!(count));
    }
}

#[test]
fn standard_rank_one_maslov_orbit() {
    let out = run(&["standard", "--tuple", "0,0,0,0,1", "--rank", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("(0/1) (1/2) (3/4)"), "{}", text);
}

#[test]
fn classify_pair_exit_and_classes() {
    let out = run(&["classify-pair", "--point", "0/1,0/1", "--point", "1/2,1/2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["mu"], 0);
    assert_eq!(v["class"]["transversal"], true);
}

#[test]
fn reduce_round_trips_an_embedded_standard_triple() {
    let std_out = run(&["standard", "--tuple", "0,1,1,2,2", "--rank", "2", "--flavor", "hermitian", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&std_out)).unwrap();
    let input = serde_json::json!({ "matrices": v["matrices"] }).to_string();
    let out = run(&["classify-triple", "--json", &input, "--witness", "--format", "json"]);
    assert!(out.status.success());
    let w: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(w["tuple"]["N"], serde_json::json!([0, 1, 1, 2, 2]));
    assert!(w["witness"].is_object());
}

#[test]
fn parse_errors_exit_three() {
    let out = run(&["classify-triple", "--json", "not json"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["maslov", "0/1", "1/2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn validation_errors_exit_one_with_code() {
    let out = run(&[
        "cartan",
        "--json",
        r#"{"vectors":[{"re":[1,0],"im":[0,0]},{"re":[1,-1],"im":[0,0]},{"re":[1,0],"im":[0,1]}]}"#,
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["error"]["code"], "not-isotropic");
}

#[test]
fn cartan_fixed_value() {
    let out = run(&[
        "cartan",
        "--json",
        r#"{"vectors":[{"re":[1,1],"im":[0,0]},{"re":[1,-1],"im":[0,0]},{"re":[1,0],"im":[0,1]}]}"#,
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["re"].as_f64().unwrap() + 1.0).abs() < 1e-10);
    assert!(v["im"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn selftest_passes_and_is_deterministic() {
    let a = run(&["selftest", "--seed", "7", "--format", "json"]);
    let b = run(&["selftest", "--seed", "7", "--format", "json"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["suites"].as_array().unwrap().len(), 9);
}
