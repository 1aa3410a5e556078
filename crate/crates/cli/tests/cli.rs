use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FIVE_BY_FOUR: &str = r#"{
  "sets": ["s1", "s2", "s3", "s4", "s5"],
  "universe": ["u1", "u2", "u3", "u4"],
  "edges": [["s1","u1"], ["s1","u2"], ["s1","u3"], ["s2","u4"],
            ["s3","u3"], ["s3","u2"], ["s4","u3"], ["s5","u4"]]
}"#;

fn dthard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dthard"))
        .args(args)
        .env_remove("DTHARD_ELL")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn setup() -> (TempDir, String) {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("instance.json");
    fs::write(&inst, FIVE_BY_FOUR).unwrap();
    let p = inst.to_str().unwrap().to_string();
    (dir, p)
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn solve_setcover_reports_the_optimum() {
    let (_d, inst) = setup();
    let out = dthard(&["solve-setcover", "--instance", &inst]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["opt"], 2);
    assert_eq!(v["cover"], serde_json::json!(["s1", "s2"]));
}

#[test]
fn construction_bundle_and_adjudication() {
    let (d, inst) = setup();
    let out_dir = path(d.path(), "bundle");
    let out = dthard(&["gen", "construction", "--instance", &inst, "--out", &out_dir, "--negated", "--k", "2", "--k-prime", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: Value = serde_json::from_str(&fs::read_to_string(Path::new(&out_dir).join("bundle.json")).unwrap()).unwrap();
    assert_eq!(meta["yes"]["junta_size"], 4);
    assert_eq!(meta["floors"]["plain"]["value"], "1/36");
    assert_eq!(meta["no"]["dnf_size"]["kind"], "power_of_two");
    assert!(fs::read_to_string(Path::new(&out_dir).join("circuit.txt")).unwrap().starts_with("inputs 10"));

    let report = dthard(&["report", "--bundle", &out_dir]);
    assert_eq!(report.status.code(), Some(0));
    assert_eq!(json(&report)["coherent"], true);

    // The constant-1 tree is far from the negated target.
    let hyp = path(d.path(), "const.json");
    fs::write(&hyp, r#"{"leaf": 1}"#).unwrap();
    let out = dthard(&["adjudicate", "--bundle", &out_dir, "--hypothesis", &hyp]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn same_inputs_give_identical_bundles() {
    let (d, inst) = setup();
    let a = path(d.path(), "a");
    let b = path(d.path(), "b");
    for out in [&a, &b] {
        assert!(dthard(&["gen", "estimation", "--instance", &inst, "--out", out, "--m", "2"]).status.success());
    }
    for f in ["circuit.txt", "generator.json", "bundle.json"] {
        assert_eq!(fs::read(Path::new(&a).join(f)).unwrap(), fs::read(Path::new(&b).join(f)).unwrap());
    }
}

#[test]
fn verify_passes_and_catches_mutants() {
    let (_d, inst) = setup();
    let out = dthard(&["verify", "--claim", "junta-certificate,dist-equivalence", "--instance", &inst]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["summary"]["failed"], 0);
    let out = dthard(&["verify", "--claim", "junta-certificate", "--instance", &inst, "--flip-label", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = dthard(&["verify", "--claim", "junta-learning", "--max-n", "3", "--max-universe", "2"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    let (_d, inst) = setup();
    assert_eq!(dthard(&["verify", "--claim", "no-such-claim", "--instance", &inst]).status.code(), Some(2));
    assert_eq!(dthard(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(dthard(&["solve-setcover", "--instance", "/nonexistent.json"]).status.code(), Some(2));
    let out = dthard(&["gen", "construction", "--instance", &inst, "--out", "/tmp/unused", "--ell", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn env_overrides_flags() {
    let (d, inst) = setup();
    let out_dir = path(d.path(), "env");
    let out = Command::new(env!("CARGO_BIN_EXE_dthard"))
        .args(["gen", "construction", "--instance", &inst, "--out", &out_dir])
        .env("DTHARD_ELL", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let meta: Value = serde_json::from_str(&fs::read_to_string(Path::new(&out_dir).join("bundle.json")).unwrap()).unwrap();
    assert_eq!(meta["ell"], 3);
}
