use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(format!("{name}.rop"))
}

fn rop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rop")).args(args).output().unwrap()
}

fn rop_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rop")).args(args).env(key, value).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn temp_file(tag: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("rop-cli-{}-{tag}.rop", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn verify_pass_exits_zero() {
    let p = problem("dfkn2");
    let out = rop(&["verify", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("verify dfkn2: PASS"), "{text}");
    assert!(text.contains("u_x != 0"));
}

#[test]
fn json_report_has_every_field() {
    let p = problem("eq5");
    let out = rop(&["verify", p.to_str().unwrap(), "--json"]);
    let v = json(&out);
    for key in ["problem", "command", "verdict", "residuals", "solutions", "assumptions", "orientation", "timings"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["problem"], "eq5");
    assert_eq!(v["command"], "verify");
    for r in v["residuals"].as_array().unwrap() {
        assert!(r["name"].is_string() && r["value"].is_string() && r["zero"].is_boolean());
    }
}

#[test]
fn human_mode_mentions_the_json_residuals() {
    let p = problem("dfkn3");
    let human = String::from_utf8(rop(&["verify", p.to_str().unwrap()]).stdout).unwrap();
    let v = json(&rop(&["verify", p.to_str().unwrap(), "--json"]));
    for r in v["residuals"].as_array().unwrap() {
        assert!(human.contains(r["name"].as_str().unwrap()), "{human}");
    }
}

#[test]
fn failing_twist_exits_one() {
    let text = std::fs::read_to_string(problem("dfkn2")).unwrap().replace("-u_xz/u_x", "u_xz/u_x");
    let path = temp_file("flip", &text);
    let out = rop(&["verify", path.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verdict"], "FAIL");
}

#[test]
fn parse_errors_report_line_and_column() {
    let path = temp_file("bad", "problem bad\nvars x y t\nequation u_xx + = 0\n");
    let out = rop(&["lax-check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":3:"), "{err}");
}

#[test]
fn json_errors_are_structured() {
    let path = temp_file("missing-lax", "problem bad\nvars x y t\nequation u_xx - u_t = 0\n");
    let out = rop(&["verify", path.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["error"].is_string());
}

#[test]
fn missing_file_is_an_error() {
    let out = rop(&["verify", "/nonexistent/problem.rop"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_finds_solutions() {
    let p = problem("dfkn2");
    let out = rop(&["solve", p.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "SOLUTIONS");
    let s = &v["solutions"][0];
    assert_eq!(s["f"]["f1_1"], "-u_xz/u_x");
    assert_eq!(s["f"]["f2_1"], "-u_xx/u_x");
    assert_eq!(s["verified"], true);
}

#[test]
fn solve_with_empty_basis_finds_nothing() {
    let mut text = std::fs::read_to_string(problem("dfkn2")).unwrap();
    text.push_str("ansatz all 0\n");
    let path = temp_file("empty-basis", &text);
    let out = rop(&["solve", path.to_str().unwrap(), "--basis", "file", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verdict"], "EMPTY");
}

#[test]
fn both_orientations_are_reported() {
    let p = problem("dfkn2");
    let v = json(&rop(&["verify", p.to_str().unwrap(), "--orientation", "both", "--json"]));
    assert_eq!(v["orientation"], serde_json::json!(["forward", "swapped"]));
    let orientations: Vec<&str> =
        v["residuals"].as_array().unwrap().iter().map(|r| r["orientation"].as_str().unwrap()).collect();
    assert!(orientations.contains(&"forward") && orientations.contains(&"swapped"));
}

#[test]
fn hierarchy_prints_k_levels() {
    let p = problem("dfkn2");
    let out = rop(&["hierarchy", p.to_str().unwrap(), "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("psi2_z") && !text.contains("psi3"), "{text}");
}

#[test]
fn linearize_reports_zero_first_variation() {
    let p = problem("eq5");
    let out = rop(&["linearize", p.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["residuals"][0]["value"], "0");
}

#[test]
fn timeout_variable_is_validated() {
    let p = problem("dfkn2");
    let out = rop_env(&["verify", p.to_str().unwrap()], "ROP_TIMEOUT_SECS", "soon");
    assert_eq!(out.status.code(), Some(2));
    let out = rop_env(&["verify", p.to_str().unwrap()], "ROP_TIMEOUT_SECS", "60");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn order_bound_is_enforced() {
    let p = problem("dfkn2");
    let out = rop(&["verify", p.to_str().unwrap(), "--max-order", "1", "--json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["error"].as_str().unwrap().contains("exceeds the configured bound 1"));
}
