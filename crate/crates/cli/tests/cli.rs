use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_brstlab"));
    cmd.env_remove("BRSTLAB_TOL");
    cmd
}

fn inputs(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../inputs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn golden_single_projection() {
    let out = run(&["compare", inputs("single_projection.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let golden = include_str!("golden/single_projection.json");
    assert_eq!(stdout(&out), golden);
}

#[test]
fn byte_identical_runs() {
    for name in ["single_projection.json", "ko_dt1.json", "combined.json"] {
        let path = inputs(name);
        let a = run(&["compare", path.to_str().unwrap()]);
        let b = run(&["compare", path.to_str().unwrap()]);
        assert_eq!(a.status.code(), Some(0), "{name}");
        assert_eq!(a.stdout, b.stdout, "{name}");
    }
}

#[test]
fn verdicts_from_inputs() {
    let cases = [
        ("single_projection.json", "brst_strictly_larger"),
        ("ko_trivial.json", "trivial"),
        ("ko_dt1.json", "equivalent"),
        ("combined.json", "equivalent"),
    ];
    for (name, verdict) in cases {
        let out = run(&["compare", inputs(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(v["verdict"], verdict, "{name}");
    }
}

#[test]
fn json_round_trip_is_fixed_point() {
    let out = run(&["compare", inputs("ko_dt1.json").to_str().unwrap()]);
    let text = stdout(&out);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let again = brstlab_core::report::emit_json(&v);
    assert_eq!(text, again);
}

#[test]
fn stdin_and_out_file() {
    let spec = std::fs::read_to_string(inputs("single_projection.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let out = run_stdin(&["dsp", "-", "--out", target.to_str().unwrap()], &spec);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(v["dims"]["d_s"], 2);
    assert_eq!(v["stage"], "dsp");
}

#[test]
fn text_format() {
    let out = run(&["check", inputs("su2.json").to_str().unwrap(), "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("brstlab report\n"));
    assert!(text.contains("PASS  nilpotent"));
}

#[test]
fn exit_code_two_on_bad_input() {
    assert_eq!(run_stdin(&["check"], "{not json").status.code(), Some(2));
    assert_eq!(run_stdin(&["check"], r#"{"kind": "hamiltonian", "bogus": 1}"#).status.code(), Some(2));
    let non_hermitian = r#"{"kind": "hamiltonian", "h0_dim": 2, "constraints": [[[[0,0],[1,0]],[[0,0],[0,0]]]]}"#;
    assert_eq!(run_stdin(&["check"], non_hermitian).status.code(), Some(2));
    assert_eq!(run(&["check", "/nonexistent/spec.json"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let out = bin().args(["check", inputs("su2.json").to_str().unwrap()]).env("BRSTLAB_TOL", "abc").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_code_one_on_failed_check() {
    // a zero tolerance turns round-off residuals into failures
    let out = run(&["check", inputs("single_projection.json").to_str().unwrap(), "--tol", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("check failed"));
    // operator cohomology is capped at total dimension 64; this one has 5 x 16
    let diag = |k: usize| -> serde_json::Value {
        (0..5).map(|i| (0..5).map(|j| if i == j && i == k { [1.0, 0.0] } else { [0.0, 0.0] }).collect::<Vec<_>>()).collect()
    };
    let big = serde_json::json!({"kind": "hamiltonian", "h0_dim": 5, "ghost_rep": "full", "constraints": [diag(4), diag(3)]});
    let out = run_stdin(&["physical"], &big.to_string());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run_stdin(&["dsp"], &big.to_string()).status.code(), Some(0));
}

#[test]
fn tolerance_precedence() {
    let path = inputs("single_projection.json");
    let tol_of = |o: &Output| {
        let v: serde_json::Value = serde_json::from_str(&stdout(o)).unwrap();
        v["tolerance"]["abs"].as_f64().unwrap()
    };
    let env = bin().args(["check", path.to_str().unwrap()]).env("BRSTLAB_TOL", "1e-8").output().unwrap();
    assert_eq!(tol_of(&env), 1e-8);
    let both = bin()
        .args(["check", path.to_str().unwrap(), "--tol", "1e-7"])
        .env("BRSTLAB_TOL", "1e-8")
        .output()
        .unwrap();
    assert_eq!(tol_of(&both), 1e-7);
}
