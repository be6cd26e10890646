use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn barbot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_barbot"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn barbot")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    rd.records()
        .map(|r| r.unwrap().iter().map(|s| s.parse().unwrap()).collect())
        .collect()
}

#[test]
fn lemma64_default_grid_passes() {
    let dir = TempDir::new().unwrap();
    let o = barbot(dir.path(), &["lemma64", "--beta-max", "0.95", "--d-max", "5", "--z-steps", "64", "--out", "r.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("r.json"));
    assert_eq!(r["passed"], true);
    assert_eq!(r["report"]["cells"], 2_264_064);
    assert!(r["report"]["min_margin"].as_f64().unwrap() >= -1e-9);
    assert!(r["report"]["oracle_dev"].as_f64().unwrap() <= 1e-10);
    for key in ["argmin", "max_margin", "min_eta", "min_eta_slack", "grid"] {
        assert!(r["report"].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn lemma64_rejects_unit_beta() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&barbot(dir.path(), &["lemma64", "--beta-max", "1.0"])), 2);
    assert_eq!(code(&barbot(dir.path(), &["lemma64", "--d-step", "0"])), 2);
    assert_eq!(code(&barbot(dir.path(), &["lemma64", "--bogus"])), 2);
}

#[test]
fn solve_torus_constant() {
    let dir = TempDir::new().unwrap();
    let o = barbot(dir.path(), &["solve", "--domain", "torus", "--t-const", "1", "--n", "64", "--out-field", "u.csv", "--out", "s.json"]);
    assert_eq!(code(&o), 0);
    let s = json(&dir.path().join("s.json"));
    assert_eq!(s["converged"], true);
    let text = std::fs::read_to_string(dir.path().join("u.csv")).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(2)
        .flat_map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .collect();
    assert_eq!(values.len(), 64 * 64);
    assert!(values.iter().all(|v| v.abs() < 1e-8));
}

#[test]
fn solve_disk_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let o = barbot(dir.path(), &["solve", "--domain", "disk", "--t-zero", "--n", "128", "--out", "s.json"]);
    assert_eq!(code(&o), 0);
    let s = json(&dir.path().join("s.json"));
    assert!(s["reference_error"].as_f64().unwrap() <= 5e-3);
    assert!(s["report"]["curvature_max"].as_f64().unwrap() < 0.0);
}

#[test]
fn solve_usage_and_failure_codes() {
    let dir = TempDir::new().unwrap();
    // Disk with nonzero t needs boundary data.
    assert_eq!(code(&barbot(dir.path(), &["solve", "--domain", "disk", "--t-monomial", "1,1"])), 2);
    assert_eq!(code(&barbot(dir.path(), &["solve", "--n", "4", "--t-const", "1"])), 2);
    let o = barbot(dir.path(), &["solve", "--domain", "torus", "--t-zero", "--n", "16", "--out", "s.json"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&dir.path().join("s.json"))["converged"], false);
}

#[test]
fn solve_disk_with_tabulated_boundary() {
    let dir = TempDir::new().unwrap();
    let o = barbot(dir.path(), &["solve", "--domain", "disk", "--t-zero", "--n", "32", "--out-field", "u.csv"]);
    assert_eq!(code(&o), 0);
    let o = barbot(dir.path(), &["solve", "--domain", "disk", "--t-monomial", "0.5,1", "--n", "32", "--boundary", "u.csv", "--out", "s.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("s.json"));
    assert!(s["report"]["beta_sup"].as_f64().unwrap() < 1.0);
}

#[test]
fn gap_scan_red_slope() {
    let dir = TempDir::new().unwrap();
    let o = barbot(dir.path(), &["gap-scan", "--family", "red", "--max-len", "5", "--out", "g.json", "--out-csv", "g.csv"]);
    assert_eq!(code(&o), 0);
    let g = json(&dir.path().join("g.json"));
    assert!(g["summary"]["A"].as_f64().unwrap() > 0.3);
    assert!(g["relation_residual"].as_f64().unwrap() <= 1e-9);
    let rows = csv_rows(&dir.path().join("g.csv"));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[4][1], 19192.0);
}

#[test]
fn gap_scan_untwisted_barbot_equals_red() {
    let dir = TempDir::new().unwrap();
    barbot(dir.path(), &["gap-scan", "--family", "red", "--max-len", "4", "--out-csv", "red.csv"]);
    let o = barbot(dir.path(), &["gap-scan", "--family", "barbot", "--chi", "0,0,0,0", "--max-len", "4", "--out-csv", "bb.csv"]);
    assert_eq!(code(&o), 0);
    let (red, bb) = (csv_rows(&dir.path().join("red.csv")), csv_rows(&dir.path().join("bb.csv")));
    assert_eq!(red.len(), bb.len());
    for (a, b) in red.iter().zip(&bb) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

#[test]
fn gap_scan_irreducible_doubles() {
    let dir = TempDir::new().unwrap();
    barbot(dir.path(), &["gap-scan", "--family", "red", "--max-len", "3", "--out-csv", "red.csv"]);
    barbot(dir.path(), &["gap-scan", "--family", "irr", "--max-len", "3", "--out-csv", "irr.csv"]);
    let (red, irr) = (csv_rows(&dir.path().join("red.csv")), csv_rows(&dir.path().join("irr.csv")));
    for (a, b) in red.iter().zip(&irr) {
        // min_lg12 doubles exactly; singular gaps only approximately.
        assert!((b[5] - 2.0 * a[5]).abs() < 1e-9);
        assert!((b[2] / a[2] - 2.0).abs() < 0.25);
    }
}

#[test]
fn gap_scan_usage_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&barbot(dir.path(), &["gap-scan", "--family", "hyper"])), 2);
    assert_eq!(code(&barbot(dir.path(), &["gap-scan", "--family", "barbot"])), 2);
    assert_eq!(code(&barbot(dir.path(), &["gap-scan", "--family", "barbot", "--chi", "1,2"])), 2);
}

#[test]
fn certify_flow_defaults() {
    let dir = TempDir::new().unwrap();
    let o = barbot(dir.path(), &["certify-flow", "--samples", "512", "--out", "c.json"]);
    assert_eq!(code(&o), 0);
    let c = json(&dir.path().join("c.json"));
    let push = c["pushforward"].as_array().unwrap();
    assert_eq!(push.len(), 3);
    for p in push {
        assert_eq!(p["inside"], 512);
        assert!(p["min_displacement"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(c["flow_nesting"]["all_nested"], true);
    assert_eq!(code(&barbot(dir.path(), &["certify-flow", "--t-step", "0"])), 2);
}

#[test]
fn fiber_rows_lie_on_the_conic() {
    let dir = TempDir::new().unwrap();
    let o = barbot(dir.path(), &["fiber", "--theta-steps", "256", "--out-csv", "f.csv"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&dir.path().join("f.csv"));
    assert_eq!(rows.len(), 256);
    assert!(rows.iter().all(|r| r[7].abs() <= 1e-12));
    let o = barbot(dir.path(), &["fiber", "--theta-steps", "8"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 9);
}

#[test]
fn fiber_conic_position() {
    let dir = TempDir::new().unwrap();
    let o = barbot(dir.path(), &["fiber", "--conic-position", "--samples", "1000", "--out-csv", "f.csv", "--out", "f.json"]);
    assert_eq!(code(&o), 0);
    let r = &json(&dir.path().join("f.json"))["conic_position"];
    assert_eq!(r["lines_outside"], 1000);
    assert_eq!(r["planes_meet_interior"], 1000);
    assert_eq!(code(&barbot(dir.path(), &["fiber", "--point", "1,0,0"])), 2);
}

#[test]
fn reports_are_deterministic() {
    let dirs = [TempDir::new().unwrap(), TempDir::new().unwrap()];
    for d in &dirs {
        barbot(d.path(), &["gap-scan", "--family", "barbot", "--chi", "0.3,0,-0.2,0.1", "--max-len", "7", "--budget", "40000", "--seed", "7", "--out", "g.json", "--out-csv", "g.csv"]);
        barbot(d.path(), &["fiber", "--conic-position", "--samples", "200", "--seed", "3", "--out", "f.json", "--out-csv", "f.csv"]);
    }
    let g = json(&dirs[0].path().join("g.json"));
    assert_eq!(g["summary"]["per_length"].as_array().unwrap().len(), 7);
    for name in ["g.json", "g.csv", "f.json", "f.csv"] {
        let x = std::fs::read(dirs[0].path().join(name)).unwrap();
        let y = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn run_replays_config() {
    let dir = TempDir::new().unwrap();
    barbot(dir.path(), &["gap-scan", "--family", "red", "--max-len", "3", "--out", "g.json"]);
    let g = json(&dir.path().join("g.json"));
    let mut config = g["config"].clone();
    config["out"] = Value::from("replay.json");
    std::fs::write(dir.path().join("cfg.json"), config.to_string()).unwrap();
    let o = barbot(dir.path(), &["run", "--config", "cfg.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let replay = json(&dir.path().join("replay.json"));
    assert_eq!(replay["summary"], g["summary"]);

    config["extra"] = Value::from(1);
    std::fs::write(dir.path().join("bad.json"), config.to_string()).unwrap();
    assert_eq!(code(&barbot(dir.path(), &["run", "--config", "bad.json"])), 2);
    config.as_object_mut().unwrap().remove("extra");
    config["params"]["colour"] = Value::from("red");
    std::fs::write(dir.path().join("bad2.json"), config.to_string()).unwrap();
    assert_eq!(code(&barbot(dir.path(), &["run", "--config", "bad2.json"])), 2);
}
