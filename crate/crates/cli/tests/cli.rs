use std::path::Path;
use std::process::{Command, Output};

fn ader(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ader")).args(args).output().expect("binary runs")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn column(table: &[Vec<String>], name: &str) -> Vec<String> {
    let i = table[0].iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    table[1..].iter().map(|r| r[i].clone()).collect()
}

fn solution_values(path: &Path) -> Vec<f64> {
    rows(path)[1..].iter().flat_map(|r| r[2..].iter().map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>()).collect()
}

#[test]
fn smooth_three_dimensional_run_and_mode_equivalence() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["--set", "dim=3", "--set", "depth=3", "--set", "order=3", "--scenario", "smooth-density-wave"];

    let out = dir.path().join("fused");
    let o = ader(&[&base[..], &["--mode", "fused", "--steps", "5", "--out", out.to_str().unwrap()]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = rows(&out.join("metrics.csv"));
    assert_eq!(metrics.len(), 1 + 5);
    assert!(column(&metrics, "reruns").iter().all(|r| r == "0"));

    let mut solutions = Vec::new();
    for mode in ["fused", "straightforward"] {
        let out = dir.path().join(format!("forced-{mode}"));
        let o = ader(&[&base[..], &["--mode", mode, "--steps", "5", "--force-dt", "5e-4", "--out", out.to_str().unwrap()]].concat());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        solutions.push(solution_values(&out.join("solution_final.csv")));
    }
    assert_eq!(solutions[0].len(), solutions[1].len());
    let diff = solutions[0].iter().zip(&solutions[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-12, "{diff}");
}

#[test]
fn invalid_order_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ader(&["--set", "p=12", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("0..=9"), "{msg}");
    assert!(!dir.path().join("metrics.csv").exists());
}

#[test]
fn unknown_flag_and_key_are_config_errors() {
    assert_eq!(ader(&["--bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let o = ader(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("run.cfg:1"));
    assert_eq!(ader(&["--mode", "lazy"]).status.code(), Some(2));
    assert_eq!(ader(&["--mode", "shifted", "--parallel"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_reports_step() {
    let dir = tempfile::tempdir().unwrap();
    let o = ader(&[
        "--scenario", "sod", "--force-dt", "0.05", "--steps", "20", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("numerical failure at step"), "{msg}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "numerical-failure");
}

#[test]
fn config_file_and_speed_spike() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spike.cfg");
    std::fs::write(
        &cfg,
        "# velocity bump after step 4\nsystem = euler\nd = 2\nL = 2\np = 2\nscenario = speed-spike\nspike_step = 4\nsteps = 12\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = ader(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--trace"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = rows(&out.join("metrics.csv"));
    let reruns = column(&metrics, "reruns");
    assert_eq!(reruns.iter().filter(|r| *r == "1").count(), 1);
    assert_eq!(reruns[4], "1");
    assert!(column(&metrics, "sweeps").iter().all(|s| s == "1" || s == "2"));
    let trace = rows(&out.join("trace.csv"));
    assert_eq!(trace[0], ["sweep", "step", "task", "entity"]);
    assert!(trace.len() > 1);
}

#[test]
fn metrics_schema_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let o = ader(&["--set", "L=1", "--set", "p=1", "--steps", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "step,t,dt_old,dt_new,dt_adm,dt,reruns,sweeps,predict_reads,predict_writes,extrapolate_reads,\
         extrapolate_writes,solveRiemann_reads,solveRiemann_writes,integrateVolume_reads,integrateVolume_writes,\
         integrateFace_reads,integrateFace_writes,update_reads,update_writes,calcTimeStep_reads,calcTimeStep_writes,\
         memory_reads,memory_writes,q_reads_per_cell,troubled,wall_seconds"
    );
    assert!(text.ends_with('\n'));
    assert_eq!(column(&rows(&dir.path().join("metrics.csv")), "q_reads_per_cell"), ["1", "1"]);
}

#[test]
fn sequential_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(k.to_string());
        let o = ader(&["--scenario", "sod", "--limiter", "--steps", "6", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(std::fs::read(out.join("solution_final.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = ader(&[
        "--set", "system=advection", "--set", "p=2", "--convergence", "1,2,3", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = rows(&dir.path().join("convergence.csv"));
    assert_eq!(table[0], ["depth", "cells", "h", "steps", "dt", "l2_error", "order"]);
    let orders = column(&table, "order");
    assert_eq!(orders[0], "");
    for o in &orders[1..] {
        assert!(o.parse::<f64>().unwrap() >= 2.5, "{o}");
    }
    // no exact solution for the shock tube
    let o = ader(&["--scenario", "sod", "--convergence", "1,2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
