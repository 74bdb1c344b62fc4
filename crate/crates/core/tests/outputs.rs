//! Run artifacts: manifest completeness, snapshot round trips, tabulated
//! restarts and the convergence driver.

use std::path::Path;

use nsvfp_core::io::{read_snapshot, sha256_file, write_snapshot};
use nsvfp_core::run::{convergence_study, Simulation};
use nsvfp_core::{build_initial_data, load_config, run, RunOptions};

const SHIFT: &str = "name = \"shift\"\nt_end = 0.05\nsample_every = 0.01\nsnapshot_every = 0.02\n\
                     [grid]\nnx = 16\nnv = 16\n[initial.kinetic_shift]\ndelta_u = 0.5\n";

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn manifest_hashes_every_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_config(SHIFT).unwrap();
    let report = run(
        &cfg,
        &RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
        },
    )
    .unwrap();
    assert_eq!(report.samples, 6);
    // t = 0, 0.02, 0.04 and the final time
    assert_eq!(report.snapshots, 4);
    let m = manifest(dir.path());
    assert_eq!(m["status"], "completed");
    assert_eq!(m["steps"], report.steps);
    let listed: Vec<(String, String)> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            (
                f["path"].as_str().unwrap().to_owned(),
                f["sha256"].as_str().unwrap().to_owned(),
            )
        })
        .collect();
    let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let mut names: Vec<String> = listed.iter().map(|(n, _)| n.clone()).collect();
    names.sort();
    assert_eq!(names, on_disk);
    for (name, hash) in &listed {
        assert_eq!(&sha256_file(&dir.path().join(name)).unwrap(), hash);
    }
}

#[test]
fn final_snapshot_matches_in_memory_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_config(SHIFT).unwrap();
    run(
        &cfg,
        &RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
        },
    )
    .unwrap();
    let mut sim = Simulation::from_config(&cfg).unwrap();
    // same stopping points as the run: every sample and snapshot time
    for k in 1..=4 {
        sim.advance_to(k as f64 * 0.01).unwrap();
    }
    sim.advance_to(0.05).unwrap();
    let snap = read_snapshot(&dir.path().join("snapshot_00003.bin")).unwrap();
    assert_eq!(snap, sim.snapshot());
}

#[test]
fn tabulated_initial_data_reproduces_state_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_config(SHIFT).unwrap();
    let mut sim = Simulation::from_config(&cfg).unwrap();
    sim.advance_to(0.03).unwrap();
    let path = dir.path().join("start.bin");
    write_snapshot(&path, &sim.snapshot()).unwrap();

    let text = format!(
        "name = \"restart\"\nt_end = 0.1\n[initial.tabulated]\npath = {:?}\n",
        path.to_str().unwrap()
    );
    let restart = load_config(&text).unwrap();
    assert_eq!(restart.grid.nx, Some(16));
    let (grid, state) = build_initial_data(&restart).unwrap();
    assert_eq!(grid, sim.grid);
    assert_eq!(state.kinetic.f, sim.state.kinetic.f);
    assert_eq!(state.fluid.rho, sim.state.fluid.rho);
    assert_eq!(state.fluid.m, sim.state.fluid.m);

    let clash = format!("{text}[grid]\nnx = 32\n");
    assert!(load_config(&clash).unwrap_err().is_validation());
}

#[test]
fn failed_run_flushes_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_config(
        "name = \"stiff\"\nt_end = 1.0\nsample_every = 0.1\n[time]\ndt_mode = \"fixed\"\ndt = 4.6e-3\n\
         [grid]\nnx = 16\nnv = 16\n[params]\na = 100.0\nkappa0 = 10.0\n\
         [initial.kinetic_shift]\ndelta_u = 5.0\n",
    )
    .unwrap();
    let err = run(
        &cfg,
        &RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
        },
    )
    .unwrap_err();
    assert!(err.is_numerical(), "{err}");
    let m = manifest(dir.path());
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("fluid"));
    let rows = std::fs::read_to_string(dir.path().join("diagnostics.csv"))
        .unwrap()
        .lines()
        .count();
    assert!(rows >= 2);
}

#[test]
fn convergence_study_observes_positive_orders() {
    let cfg = load_config(
        "name = \"smooth\"\nt_end = 0.05\n[grid]\nnx = 16\nnv = 16\n\
         [initial.fluid_perturbation]\namplitude = 0.2\n[initial.kinetic_shift]\ndelta_u = 0.5\n",
    )
    .unwrap();
    let study = convergence_study(&cfg, 2).unwrap();
    assert_eq!(study.levels.len(), 2);
    assert_eq!(study.levels[1].nx, 32);
    for o in study.orders_rho.iter().chain(&study.orders_m).chain(&study.orders_f) {
        assert!(*o > 0.5, "observed order {o}");
    }
    assert!(convergence_study(&cfg, 1).unwrap_err().is_validation());
}
