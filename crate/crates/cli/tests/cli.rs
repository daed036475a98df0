use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn henon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_henon"))
        .args(args)
        .output()
        .expect("failed to launch henon")
}

fn json_ok(args: &[&str]) -> Value {
    let out = henon(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is not JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

#[test]
fn shoot_writes_result_and_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let v = json_ok(&["shoot", "--dim", "5", "--alpha", "0", "--out", d]);
    let b0 = v["beta0"].as_f64().unwrap();
    assert!(b0 < 0.0 && (b0 + 1.5583460235).abs() < 1e-8, "{b0}");
    for f in ["shoot.json", "witness_global.csv", "witness_global.json", "witness_blowup.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let saved: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("shoot.json")).unwrap()).unwrap();
    assert_eq!(saved, v);
}

#[test]
fn low_dimension_has_no_entire_solution() {
    let out = henon(&["solve", "--dim", "2", "--alpha", "0", "--beta", "-1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no entire solution"));
}

#[test]
fn precondition_errors_name_the_violated_range() {
    let out = henon(&["shoot", "--dim", "5", "--alpha", "-2"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha <= -2"));

    let out = henon(&["stab", "--dim", "5", "--alpha", "0", "--beta", "0"]);
    assert_eq!(code(&out), 2, "beta above beta0 blows up");

    let out = henon(&["stab", "--dim", "5", "--alpha", "0", "--beta", "-3", "--domain", "1-5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn inconclusive_witness_exits_with_three() {
    // inside 10 <= N < 10+4α but below the (π/ln 16)² gap of the annulus
    let out = henon(&["second", "witness", "--dim", "13", "--alpha", "0.8"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let out = henon(&["second", "witness", "--dim", "10", "--alpha", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn second_order_witness_and_threshold() {
    let w = json_ok(&["second", "witness", "--dim", "10", "--alpha", "1", "--annulus", "2"]);
    assert!(w["form"].as_f64().unwrap() < 0.0);
    assert_eq!(w["annulus"][1].as_f64().unwrap(), 32.0);
    let s = json_ok(&["second", "--dim", "12", "--alpha", "0", "--u0", "0"]);
    assert_eq!(s["threshold"], "stable_singular");
    assert!(s["distance_to_singular"].as_f64().unwrap().abs() < 1e-2);
}

#[test]
fn separatrix_in_thirteen_dimensions_is_stable() {
    let v = json_ok(&["stab", "--dim", "13", "--alpha", "0", "--beta", "separatrix"]);
    assert_eq!(v["classification"]["kind"], "stable");
}

#[test]
fn stab_writes_witness_csv() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("phi.csv");
    let v = json_ok(&[
        "stab", "--dim", "3", "--alpha", "0", "--beta", "-2", "--grid", "200", "--witness-out",
        w.to_str().unwrap(),
    ]);
    assert!(v["min_eig"]["lambda"].as_f64().unwrap() < 0.0);
    let text = fs::read_to_string(&w).unwrap();
    assert!(text.starts_with("r,phi\n"));
    assert_eq!(text.lines().count(), 2 * 200 + 2);
}

#[test]
fn asym_four_dimensions_reports_mass_and_energy_table() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_ok(&["asym", "--dim", "4", "--alpha", "0", "--out", dir.path().to_str().unwrap()]);
    assert!((v["n4"]["c0"].as_f64().unwrap() - 8.0).abs() < 0.08);
    assert!(v["energy_drift"].as_f64().unwrap() < 1e-6);
    let csv = fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert!(csv.starts_with("s,w,E\n") && csv.lines().count() > 100);
}

fn sweep(store: &Path, dims: &str, resume: bool) -> Output {
    let mut args = vec!["sweep", "--dim", dims, "--alpha", "0", "--grid", "200", "--fixture", "--out"];
    args.push(store.to_str().unwrap());
    if resume {
        args.push("--resume");
    }
    henon(&args)
}

#[test]
fn sweep_is_reproducible_and_resumable() {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    assert!(sweep(&a, "3,4", false).status.success());
    let table_a = fs::read(a.join("table.json")).unwrap();

    // interrupted run: one cell done, then a torn record left behind
    assert!(sweep(&b, "3", false).status.success());
    let mut rec = fs::read_to_string(b.join("records.jsonl")).unwrap();
    rec.push_str("{\"dim\":4,\"alp");
    fs::write(b.join("records.jsonl"), rec).unwrap();
    let refused = sweep(&b, "3,4", false);
    assert_eq!(code(&refused), 2, "existing store needs --resume");
    assert!(sweep(&b, "3,4", true).status.success());
    assert_eq!(fs::read(b.join("table.json")).unwrap(), table_a);

    let v: Value = serde_json::from_slice(&table_a).unwrap();
    for r in v.as_array().unwrap() {
        for s in r["samples"].as_array().unwrap() {
            assert_eq!(s["unstable"], true);
            assert_eq!(s["classification"]["kind"], "stable_at_infinity");
        }
    }
}

#[test]
fn sweep_rejects_a_store_with_other_settings() {
    let root = tempfile::tempdir().unwrap();
    let s = root.path().join("s");
    assert!(sweep(&s, "3", false).status.success());
    let out = henon(&[
        "sweep", "--dim", "3", "--alpha", "0", "--grid", "300", "--fixture", "--resume", "--out",
        s.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}
