use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lambda-ultra")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exited normally")
}

fn write(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lambda-ultra-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn lattice_verdicts() {
    assert_eq!(code(&["lattice", "check", "b2"]), 0);
    assert_eq!(code(&["lattice", "check", "ch4"]), 0);
    assert_eq!(code(&["lattice", "check", "m3"]), 1);
    assert_eq!(code(&["lattice", "check", "n5"]), 1);
    let dot = run(&["lattice", "dot", "b2"]);
    assert!(String::from_utf8(dot.stdout).unwrap().contains("digraph"));
}

#[test]
fn space_validation() {
    let good = write("good.json", r#"{"lattice":"ch3","points":["x","y","z"],"d":{"x,y":"e","y,z":"1","x,z":"1"}}"#);
    let bad = write("bad.json", r#"{"lattice":"ch3","points":["x","y","z"],"d":{"x,y":"e","y,z":"e","x,z":"1"}}"#);
    assert_eq!(code(&["space", "check", good.to_str().unwrap()]), 0);
    assert_eq!(code(&["space", "check", bad.to_str().unwrap()]), 1);
    let out = run(&["--json", "space", "check", good.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], true);
}

#[test]
fn closing_adds_the_missing_witness() {
    let k = write(
        "k.json",
        r#"{"lattice":"b2","sorts":{"p":"(a,1)","q":"(b,1)","t":"(1,1)"},"U":[["a","1","p","t"],["b","1","q","t"]]}"#,
    );
    let out = run(&["k0", "close", "--oracle", k.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("(0,1)"));
    assert!(text.contains("oracle agrees"));
}

#[test]
fn ramsey_exit_codes() {
    assert_eq!(code(&["ramsey-check", "--a", "2", "--b", "3", "--c", "6"]), 0);
    assert_eq!(code(&["ramsey-check", "--a", "2", "--b", "3", "--c", "5"]), 1);
    assert_eq!(code(&["--budget", "10", "ramsey-check", "--a", "2", "--b", "3", "--c", "6"]), 2);
    let out = run(&["--json", "ramsey-search", "--a", "2", "--b", "3", "--bound", "7"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["size"], 6);
}

#[test]
fn enumeration_counts() {
    let out = run(&["--json", "enumerate", "--family", "k0", "--lattice", "ch2", "-n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["count"], 3);
    assert_eq!(code(&["--budget", "1", "enumerate", "--family", "space", "--lattice", "b2", "-n", "4"]), 2);
}

#[test]
fn unreadable_input_is_invalid() {
    assert_eq!(code(&["space", "check", "/nonexistent/space.json"]), 1);
}
