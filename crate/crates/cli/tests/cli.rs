use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gpuscript"));
    c.env_remove("GPUSCRIPT_BACKEND");
    c
}

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_prints_fixpoint_table() {
    let o = run(&["check", "-e", "a=-2;b=sqrt(a);a=b+1;"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().ends_with("F7"), "{text}");
    assert!(text.contains("F6(⊥) = F7(⊥)"));
    assert!(text.contains("  a : complex"));
}

#[test]
fn graph_colors_three_uniform_nodes() {
    let o = run(&["graph", "-e", "1/2+1/2*sin(|#|-seconds())"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.matches("fillcolor=lightblue").count(), 3);
    assert_eq!(text.matches("fillcolor=orange").count(), 6);
}

#[test]
fn run_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for (k, backend) in ["cpu", "cpu", "sim"].iter().enumerate() {
        let out = dir.path().join(format!("{k}.png"));
        let o = run(&[
            "run",
            corpus("sphere.gs").to_str().unwrap(),
            "--backend",
            backend,
            "--viewport=-1.5,-1.5,1.5,1.5",
            "--resolution",
            "32x32",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
}

#[test]
fn backend_default_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.f32");
    let o = bin()
        .env("GPUSCRIPT_BACKEND", "cpu")
        .args(["run", corpus("wave.gs").to_str().unwrap(), "--resolution", "4x4", "-o", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("cpu:"));
    assert_eq!(std::fs::metadata(out).unwrap().len(), 4 * 4 * 16);
}

#[test]
fn compile_writes_bundle_with_uniform_override() {
    let o = run(&["compile", corpus("julia.gs").to_str().unwrap(), "-u", "c=0.3+0.1*i"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 2);
    for a in list {
        assert!(a["glsl"].as_str().unwrap().contains("texture2D"));
        assert!(a["typeKey"].is_string());
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["run", "-e", "1+"]).status.code(), Some(1));
    assert_eq!(run(&["run", "--resolution", "0x2", "-e", "1"]).status.code(), Some(1));
    assert_eq!(run(&["check", "--viewport=1,0,0,1", "-e", "1"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["compile", corpus("if_top.gs").to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["builtins"]).status.code(), Some(0));
}

#[test]
fn corpus_matches_golden_files() {
    let o = run(&["corpus"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert_eq!(text.matches("PASS").count(), 5);
}
