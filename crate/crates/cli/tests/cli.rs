use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn volflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/synthetic.json")
        .to_string_lossy()
        .into_owned()
}

#[test]
fn missing_tick_file_exits_with_io_code() {
    let out = volflow(&[
        "rv",
        "--ticks",
        "X=/nonexistent/ticks.csv",
        "--start",
        "2021-01-01T00:00:00Z",
        "--end",
        "2021-01-02T00:00:00Z",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ticks.csv"), "{err}");
}

#[test]
fn malformed_config_exits_with_schema_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\"start\": 3}").unwrap();
    let out = volflow(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bundled_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = volflow(&[
            "run",
            "--config",
            &config(),
            "--output-dir",
            d.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in [
        "panel.csv",
        "vfit.json",
        "flowgraph.json",
        "spillover.json",
        "fit_LEAD.json",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema_version"], "1");
    assert_eq!(manifest["seed"], 7);
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    volflow(&[
        "run",
        "--config",
        &config(),
        "--output-dir",
        a.to_str().unwrap(),
    ]);
    volflow(&[
        "run",
        "--config",
        &config(),
        "--output-dir",
        b.to_str().unwrap(),
        "--seed",
        "8",
    ]);
    assert_ne!(
        fs::read(a.join("panel.csv")).unwrap(),
        fs::read(b.join("panel.csv")).unwrap()
    );
}

#[test]
fn shock_and_spillover_from_a_saved_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    volflow(&[
        "run",
        "--config",
        &config(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    let fit = out_dir.join("vfit.json");
    let out = volflow(&[
        "shock",
        "--fit",
        fit.to_str().unwrap(),
        "--source",
        "LEAD",
        "--sd",
    ]);
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.starts_with("target"));
    assert!(table.contains("FOLLOW"));
    let out = volflow(&[
        "shock",
        "--fit",
        fit.to_str().unwrap(),
        "--source",
        "NOPE",
        "--sd",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = volflow(&["spillover", "--fit", fit.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["to_sums"].as_array().unwrap().len(), 2);
}

#[test]
fn simulated_mem_round_trips_through_fit_uni() {
    let dir = tempfile::tempdir().unwrap();
    let panel = dir.path().join("sim.csv");
    let out = volflow(&[
        "simulate",
        "mem",
        "--n",
        "3000",
        "--seed",
        "3",
        "--out",
        panel.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = volflow(&["fit-uni", "--panel", panel.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let s = v["SIM"]["params"]["s"].as_f64().unwrap();
    assert!((s - 0.28).abs() < 0.03, "s = {s}");
}
