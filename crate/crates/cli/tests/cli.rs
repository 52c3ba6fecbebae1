use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liesym")).args(args).output().expect("spawn liesym")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let out = run(&all);
    let v = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{args:?}: {e}\n{}", String::from_utf8_lossy(&out.stderr)));
    (out.status.code().unwrap(), v)
}

#[test]
fn help_matches_the_book() {
    let out = run(&["gen-docs"]);
    assert!(out.status.success());
    let book: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "book", "src", "cli.md"].iter().collect();
    let written = std::fs::read_to_string(book).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), written, "run `liesym gen-docs > book/src/cli.md`");
}

#[test]
fn symmetry_check_exit_codes() {
    assert_eq!(code(&["check", &data("telegraph.pde"), &data("v5.field")]), 0);
    let (c, v) = json(&["check", &data("telegraph.pde"), &data("v5.field")]);
    assert_eq!(c, 0);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["field"], "v5");
    assert_eq!(v["verdict"], "Symmetry");

    let dir = std::env::temp_dir().join(format!("liesym-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let wrong = dir.join("wrong.field");
    std::fs::write(&wrong, "field w: 2*a^2*t d/dy + y d/dt;\n").unwrap();
    let (c, v) = json(&["check", &data("telegraph.pde"), wrong.to_str().unwrap()]);
    assert_eq!(c, 1);
    assert_eq!(v["verdict"], "NotSymmetry");
}

#[test]
fn usage_and_parse_errors_exit_two() {
    assert_eq!(code(&["table"]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
    assert_eq!(code(&["paper-report", "--tol", "-1"]), 2);
    assert_eq!(code(&["check", &data("telegraph.pde"), "/nonexistent/file"]), 2);
    let dir = std::env::temp_dir().join(format!("liesym-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.field");
    std::fs::write(&bad, "field v: d/dq;\n").unwrap();
    let out = run(&["check", &data("telegraph.pde"), bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.field") && err.contains("1:"), "{err}");
    assert_eq!(code(&["adjoint-apply", "--element", "1,2", "--generator", "1", "--epsilon", "0.5"]), 2);
}

#[test]
fn table_diff_against_the_entered_table() {
    let (c, v) = json(&["table", &data("telegraph.fields"), "--diff", &data("table1.txt")]);
    assert_eq!(c, 1);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["diff"]["entries"].as_array().unwrap().len(), 21);
    assert_eq!(v["diff"]["antisymmetry_failures"].as_array().unwrap().len(), 6);
    assert_eq!(v["rows"][1][4], "2*v3 - k*v4");
    assert_eq!(code(&["table", &data("telegraph.fields")]), 0);
}

#[test]
fn determining_system_without_an_ansatz() {
    let (c, v) = json(&["determining", &data("telegraph.pde")]);
    assert_eq!(c, 0);
    assert_eq!(v["count"], 32);
    assert_eq!(v["ansatz"].as_array().unwrap().len(), 5);
}

#[test]
fn adjoint_verification() {
    let files = [data("telegraph.fields"), data("adjoint.matrices")];
    let (c, v) = json(&["adjoint", &files[0], &files[1], "--generator", "1", "--verify", "M1"]);
    assert_eq!(c, 1);
    assert_eq!(v["verification"]["passed"], false);
    let (c, v) = json(&["adjoint", &files[0], &files[1], "--generator", "2", "--verify", "M2"]);
    assert_eq!(c, 1);
    assert_eq!(v["nilpotency_index"], 2);
    assert_eq!(code(&["adjoint", &files[0], "--generator", "12"]), 2);
}

#[test]
fn adjoint_apply_is_seeded() {
    let args =
        ["adjoint-apply", "--element", "0,0,0,0,0,1,0,0,0,0,0", "--generator", "1", "--epsilon", "0.5"];
    let (c, v) = json(&args);
    assert_eq!(c, 0);
    let y: Vec<f64> = serde_json::from_value(v["image"].clone()).unwrap();
    assert!((y[5] - 0.5f64.cos()).abs() < 1e-12);
    assert!((y[6] - 0.5f64.sin()).abs() < 1e-12);
    assert_eq!(json(&args).1, v);
}

#[test]
fn structure_with_assumptions() {
    let (c, v) = json(&["structure", &data("telegraph.fields")]);
    assert_eq!(c, 0);
    assert_eq!(v["derived_series"], serde_json::json!([11, 10, 10]));
    assert_eq!(v["radical"]["basis"], serde_json::json!(["v2", "v3", "v4", "v6", "v7"]));
    assert_eq!(v["center"], serde_json::json!(["v4"]));
    assert_eq!(v["assumptions"], serde_json::json!(["a^2 != 0"]));
    let (_, v) = json(&["structure", &data("telegraph.fields"), "--assume", "a>0"]);
    assert_eq!(v["assumptions"], serde_json::json!([]));
    assert_eq!(v["discharged"], serde_json::json!(["a^2 != 0"]));
    assert_eq!(code(&["structure", &data("telegraph.fields"), "--assume", "a >= 1"]), 2);
}

#[test]
fn flows_classify_the_groups() {
    let (c, v) = json(&["flows", &data("telegraph.fields"), "--groups", &data("telegraph.groups")]);
    assert_eq!(c, 1);
    let flows = v["flows"].as_array().unwrap();
    assert_eq!(flows.len(), 11);
    for f in &flows[..4] {
        assert_eq!(f["verdict"], "ExactFlow", "{f}");
    }
}

#[test]
fn residuals_of_transformed_solutions() {
    let (c, v) = json(&["residuals", "--seed", "exp(-k*t)", "--transform", "u1", "--epsilon", "1/10"]);
    assert_eq!(c, 0);
    assert_eq!(v["check"]["exact_zero"], true);
    let (c, v) = json(&[
        "residuals",
        "--seed",
        "exp(-k*t)",
        "--transform",
        "u5",
        "--file",
        &data("telegraph.transforms"),
    ]);
    assert_eq!(c, 1);
    assert_eq!(v["check"]["pass"], false);
}

#[test]
fn json_output_to_a_file() {
    let dir = std::env::temp_dir().join(format!("liesym-cli-json-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("parse.json");
    let out = run(&["parse", &data("telegraph.fields"), "--json", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("v11"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["fields"].as_array().unwrap().len(), 11);
}

#[test]
fn paper_report_is_deterministic() {
    let a = run(&["paper-report", "--json"]);
    let b = run(&["paper-report", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["summary"]["unresolved"], 0);
    let c = run(&["paper-report", "--json", "--seed", "7"]);
    let w: Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_eq!(w["seed"], 7);
    assert_eq!(w["summary"], v["summary"]);
}
