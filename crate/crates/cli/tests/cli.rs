use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sobolev-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn doc(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.conf", "[domain]\nkind = disk\nR = 1\n\n[mesh]\nh = 0.05  # coarse\n");
    let out = run(&["solve", "--config", &cfg, "--h", "0.04"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let d = doc(&out);
    assert_eq!(d["config"]["h"], 0.04);
    assert_eq!(d["result"]["summary"]["h"], 0.04);

    let out = run(&["solve", "--config", &cfg]);
    assert_eq!(doc(&out)["config"]["h"], 0.05);
}

#[test]
fn empty_file_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.conf", "");
    let out = run(&[
        "solve", "--config", &cfg, "--domain", "square", "--side", "2", "--n", "2", "--p", "1.5", "--r", "1.5", "--h",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let d = doc(&out);
    assert_eq!(d["config"]["domain"]["kind"], "square");
    assert_eq!(d["config"]["p"], 1.5);
    assert!(d["result"]["C"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_exponent_names_the_key() {
    let out = run(&["solve", "--p", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("exponents.p"), "{}", stderr(&out));

    let out = run(&["solve", "--r", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("exponents.r"), "{}", stderr(&out));

    let out = run(&["solve", "--h", "abc"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("mesh.h"), "{}", stderr(&out));
}

#[test]
fn file_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.conf", "[mesh]\nh = 0.05\ncolour = red\n");
    let out = run(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(":3:"), "{}", stderr(&out));

    let cfg = write(dir.path(), "syntax.conf", "[mesh\n");
    let out = run(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(":1:"), "{}", stderr(&out));

    let out = run(&["solve", "--config", "/nonexistent/run.conf"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_check_exits_two() {
    let out = run(&["derivative", "--domain", "square", "--h", "0.05", "--tolerance", "1e-9"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let d = doc(&out);
    assert_eq!(d["passed"], false);
    assert!(stderr(&out).contains("formula_matches_differences"));
}

#[test]
fn side_outputs_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("out.json");
    let csv = dir.path().join("flow.csv");
    let out =
        run(&["flow", "--h", "0.05", "--steps", "2", "--json", json.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let d: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(d["result"]["steps"].as_array().unwrap().len(), 3);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("k,t,area,perimeter,C,lhs,rhs,slack\n"));
    assert_eq!(text.lines().count(), 1 + 3);

    let field = dir.path().join("phi.txt");
    let mesh = dir.path().join("mesh.txt");
    let out = run(&["solve", "--h", "0.1", "--field", field.to_str().unwrap(), "--mesh", mesh.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::metadata(&field).unwrap().len() > 0);
    assert!(std::fs::metadata(&mesh).unwrap().len() > 0);
}

#[test]
fn ball_and_conformal_commands() {
    let out = run(&["solve", "--domain", "ball", "--n", "3", "--p", "2", "--r", "2", "--grid", "2000"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let c = doc(&out)["result"]["C"].as_f64().unwrap();
    // first Dirichlet eigenvalue of the unit 3-ball is π²
    assert!((c / std::f64::consts::PI.powi(2) - 1.0).abs() < 1e-3, "{c}");

    let out = run(&["conformal", "--map", "translate 2,0,0; invert", "--points", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(doc(&out)["result"]["report"]["rows"].as_array().unwrap().len(), 5);

    let out = run(&["conformal", "--n", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let args = ["verify", "--domain", "square", "--h", "0.05"];
    let a = bin().args(args).env("SOBOLEV_LAB_THREADS", "1").output().unwrap();
    let b = bin().args(args).env("SOBOLEV_LAB_THREADS", "4").output().unwrap();
    let c = bin().args(args).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}
