use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn siegel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siegel"))
        .args(args)
        .env_remove("SIEGEL_PREC_CAP")
        .output()
        .expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn cf_golden_has_fibonacci_denominators() {
    let o = siegel(&["cf", "--omega", "golden", "--depth", "20"]);
    assert_eq!(code(&o), 0);
    let d = json(&o);
    assert_eq!(d["status"], "pass");
    let q: Vec<u64> =
        d["result"]["table"]["q"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().parse().unwrap()).collect();
    let mut fib = vec![1u64, 1];
    while fib.len() < 20 {
        fib.push(fib[fib.len() - 1] + fib[fib.len() - 2]);
    }
    assert_eq!(q, fib);
    assert_eq!(d["config"]["orders"]["depth"], 20);
}

#[test]
fn linearize_hest3_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = siegel(&["linearize", "--omega", "golden", "--germ", "quad", "--N", "300", "--certify", "hest3", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&o);
    assert_eq!(d["status"], "pass");
    assert_eq!(d["result"]["certificates"]["hest3"]["all_pass"], true);
    for f in ["linearize.json", "config.toml", "profile.csv", "conjugacy.csv", "certificate_hest3.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let written = std::fs::read(dir.path().join("linearize.json")).unwrap();
    assert_eq!(written, o.stdout);
    let profile = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(profile.starts_with("n,ln_abs_h,ln_s,K,ln_htilde,ln_divisor\n"));
    assert_eq!(profile.lines().count(), 302);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = siegel(&["linearize", "--omega", "sqrt:2", "--N", "60", "--htilde", "--out", first.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    // Re-running from the emitted config gives byte-identical JSON.
    let cfg = first.join("config.toml");
    let again = siegel(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&again), 0);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn diverge_reports_witness_and_fails_on_monotonicity() {
    let o = siegel(&["diverge", "--omega", "rule:square", "--weight", "gevrey:1", "--budget", "10000"]);
    assert_eq!(code(&o), 1);
    let d = json(&o);
    assert_eq!(d["status"], "fail");
    let checks: Vec<&str> = d["violations"].as_array().unwrap().iter().map(|v| v["check"].as_str().unwrap()).collect();
    assert_eq!(checks, vec!["increasing"]);
    let q: Vec<u64> = d["result"]["points"].as_array().unwrap().iter().map(|p| p["q"].as_u64().unwrap()).collect();
    assert_eq!(q, vec![4, 25, 679]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "command = \"cf\"\nomega = \"golden\"\ncolour = \"red\"\n").unwrap();
    for args in [
        vec!["--config", bad.to_str().unwrap()],
        vec!["cf", "--omega", "cf:[0;1,2]"],
        vec!["cf", "--omega", "sqrt:4"],
        vec!["linearize", "--omega", "golden", "--germ", "poly:[7]", "--certify", "hest3"],
        vec!["weights", "--weight", "custom:[1,3,4]"],
        vec!["cf"],
        vec!["frobnicate"],
        vec![],
    ] {
        let o = siegel(&args);
        assert_eq!(code(&o), 2, "{args:?}");
    }
}

#[test]
fn failed_axiom_exits_1_with_violation_list() {
    let o = siegel(&["weights", "--weight", "custom:[1,3,4,20]", "--check-to", "3", "--weight", "gevrey:1"]);
    assert_eq!(code(&o), 1);
    let d = json(&o);
    let v = d["violations"].as_array().unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0]["check"], "axioms:custom:[1,3,4,20]");
}

#[test]
fn precision_cap_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "command = \"cf\"\nomega = \"sqrt:2\"\n[precision]\ncap = 1024\n").unwrap();
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_siegel"));
        c.args(["--config", cfg.to_str().unwrap()]).args(extra);
        match env {
            Some(v) => c.env("SIEGEL_PREC_CAP", v),
            None => c.env_remove("SIEGEL_PREC_CAP"),
        };
        c.output().unwrap()
    };
    assert_eq!(json(&run(None, &[]))["config"]["precision"]["cap"], 1024);
    assert_eq!(json(&run(Some("2048"), &[]))["config"]["precision"]["cap"], 2048);
    assert_eq!(json(&run(Some("2048"), &["--prec-cap", "4096"]))["config"]["precision"]["cap"], 4096);
}

#[test]
fn other_verbs_run() {
    let o = siegel(&["brjuno", "--omega", "golden", "--depth", "12", "--condition", "brjuno", "--condition", "BrjunoM", "--weight", "gevrey:1"]);
    assert_eq!(code(&o), 0);
    let d = json(&o);
    assert_eq!(d["result"]["conditions"].as_array().unwrap().len(), 2);
    assert_eq!(d["result"]["sum"]["verdict"], "finite-certified");

    let dir = tempfile::tempdir().unwrap();
    let o = siegel(&["davie", "--omega", "sqrt:2", "--N", "200", "--out", dir.path().to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("davie_k.csv").exists());
    assert!(!Path::new(&dir.path().join("davie.json")).exists());

    let o = siegel(&["suite", "--criteria", "4,8"]);
    assert_eq!(code(&o), 0);
    let d = json(&o);
    assert_eq!(d["result"]["criteria"].as_array().unwrap().len(), 2);
}
