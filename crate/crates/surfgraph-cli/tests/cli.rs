use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfgraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("surfgraph-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn k5_file() -> PathBuf {
    let path = scratch("k5.json");
    let edges: Vec<[u32; 2]> = (1..=5).flat_map(|u| (u + 1..=5).map(move |v| [u, v])).collect();
    std::fs::write(&path, serde_json::json!({"n": 5, "edges": edges}).to_string()).unwrap();
    path
}

#[test]
fn verify_identities_small() {
    let out = run(&["verify-identities", "--n-max", "5", "--g", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["failed"], 0);
    assert!(v["checked"].as_u64().unwrap() > 30);
    assert_eq!(v["provenance"]["command"][1], "verify-identities");
}

#[test]
fn genus_of_k5() {
    let path = k5_file();
    let out = run(&["genus", "--in", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["genus"], 1);
}

#[test]
fn l0_residual_is_small() {
    let out = run(&["l0", "--n", "1000000", "--m", "750000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!(v["residual"].as_f64().unwrap().abs() < 1e-10);
    assert!(v["l0"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["genus"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    // stochastic commands need a seed
    assert_eq!(run(&["sample", "--n", "10", "--m", "5"]).status.code(), Some(1));
    assert_eq!(run(&["enumerate", "--class", "general", "--n", "9", "--m", "3"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn unknown_config_keys_are_usage_errors() {
    let cfg = scratch("bad.json");
    std::fs::write(&cfg, r#"{"no_such_key": 1}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "rho", "--n", "4", "--m", "3"]).status.code(), Some(1));
}

#[test]
fn config_overrides_are_recorded() {
    let cfg = scratch("cfg.json");
    std::fs::write(&cfg, r#"{"constants": {"britikov_c": 2.0}, "caps": {"simple_max_n": 6}}"#).unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "rho", "--n", "4", "--m", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["provenance"]["config"]["constants"]["britikov_c"], 2.0);
    assert_eq!(v["provenance"]["config"]["caps"]["simple_max_n"], 6);
    assert_eq!(v["provenance"]["config"]["caps"]["kernel_max_n"], 4);
    assert_eq!(v["rho"], "1");
}

#[test]
fn sampling_is_reproducible() {
    let a = run(&["sample", "--n", "300", "--m", "160", "--g", "0", "--seed", "9"]);
    let b = run(&["sample", "--n", "300", "--m", "160", "--g", "0", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json_of(&a)["provenance"]["seed"], 9);
}

#[test]
fn sweep_writes_csv_and_metadata() {
    let plan = scratch("plan.json");
    std::fs::write(
        &plan,
        r#"{"model": {"kind": "surface", "g": 0, "max_tries": 100}, "points": [{"n": 100, "lambda": 0.0}, {"n": 100, "alpha": 1.5}]}"#,
    )
    .unwrap();
    let csv = scratch("sweep.csv");
    let args = ["sweep", "--plan", plan.to_str().unwrap(), "--reps", "4", "--seed", "3", "--out", csv.to_str().unwrap()];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(&csv).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.starts_with("n,m,g,regime,"));
    let v = json_of(&out);
    assert_eq!(v["summaries"].as_array().unwrap().len(), 2);
    let meta = PathBuf::from(format!("{}.meta.json", csv.display()));
    assert!(meta.exists());
    let again = run(&args);
    assert_eq!(again.stdout, out.stdout);
    assert_eq!(std::fs::read(&csv).unwrap(), first);
}

#[test]
fn decompose_writes_counts() {
    let path = k5_file();
    let out_path = scratch("d.json");
    let out = run(&["decompose", "--in", path.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(v["n_K"], 5);
    assert_eq!(v["l"], 5);
    assert_eq!(v["d"], 5);
}

#[test]
fn sums_and_asymptotics() {
    let out = run(&["sums", "--which", "core", "--n-c", "1000", "--l", "3", "--d", "0", "--nu", "lower"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["params"]["nu"], -5.0);
    assert!(v["window"]["captured"].as_f64().unwrap() >= 0.99);
    let out = run(&["asymptotics", "--case", "main4", "--n", "100000000", "--m", "100000000"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["regime"]["tag"], "TwoCrit");
    assert_eq!(run(&["asymptotics", "--case", "main4", "--n", "10"]).status.code(), Some(1));
}
