use std::fs;
use std::path::Path;

use entgrowth_cli::run;

fn args(list: &[&str]) -> Vec<String> {
    std::iter::once("entgrowth").chain(list.iter().copied()).map(String::from).collect()
}

fn out(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn markov_l4_report_is_uniform() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(args(&["markov", "--L", "4", "--out", &out(dir.path())])), 0);
    let text = fs::read_to_string(dir.path().join("markov.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["N"], 3);
    for p in v["stationary"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
    assert!(dir.path().join("markov.meta.json").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[protocol]\n").unwrap();
    let o = out(&dir.path().join("r"));
    assert_eq!(run(args(&["sweep", "--config", cfg.to_str().unwrap(), "--out", &o])), 2);
    fs::write(&cfg, "L = 8\nfoo = 1\n").unwrap();
    assert_eq!(run(args(&["basis", "--config", cfg.to_str().unwrap(), "--out", &o])), 2);
    assert_eq!(run(args(&["basis", "--L", "7", "--out", &o])), 2);
    assert_eq!(run(args(&["markov", "--L", "16", "--out", &o])), 2);
    assert_eq!(run(args(&["nonsense"])), 2);
    assert_eq!(run(args(&["basis", "--config", "/nonexistent/cfg.toml"])), 1);
    assert!(!dir.path().join("r").exists());
}

#[test]
fn basis_listing() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(args(&["basis", "--L", "4", "--out", &out(dir.path())])), 0);
    let csv = fs::read_to_string(dir.path().join("basis.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, ["index,word,bits", "0,3,1100", "1,5,1010", "2,6,0110", "3,9,1001", "4,10,0101", "5,12,0011"]);
}

#[test]
fn sweep_writes_documented_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "L = 6\nruns = 2\n[protocol]\nkind = \"hamiltonian_mbl\"\n").unwrap();
    let o = out(&dir.path().join("r"));
    assert_eq!(run(args(&["sweep", "--config", cfg.to_str().unwrap(), "--out", &o, "--seed", "7"])), 0);
    let csv = fs::read_to_string(dir.path().join("r/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 38);
    assert!(csv.starts_with("T,S_initial,S_sat,delta_S,stderr_initial,stderr_sat,runs\n"));
    let meta = fs::read_to_string(dir.path().join("r/sweep.meta.json")).unwrap();
    assert!(meta.contains("\"master_seed\": 7"));
    assert!(meta.contains("\"classification\""));
}

#[test]
fn trajectory_headers() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path());
    assert_eq!(run(args(&["rqc", "--L", "6", "--runs", "2", "--out", &o])), 0);
    let csv = fs::read_to_string(dir.path().join("rqc.csv")).unwrap();
    assert!(csv.starts_with("time,hcee\n"));
    assert_eq!(csv.lines().count(), 2002);
    assert_eq!(run(args(&["baee", "--L", "6", "--runs", "2", "--out", &o])), 0);
    let csv = fs::read_to_string(dir.path().join("baee.csv")).unwrap();
    assert!(csv.starts_with("time,hcee,baee\n"));
}
