use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};
use tnf_core::model::{Boundary, Lattice, Model};
use tnf_core::vmc::ed::ground_state;
use tnf_lab::{run, ExperimentConfig, LabError};

fn config(v: Value) -> Result<ExperimentConfig, LabError> {
    ExperimentConfig::from_json(&v.to_string())
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn vmc_config(sweeps: usize, extra: Value) -> Value {
    let mut params = json!({
        "lattice": { "rows": 4, "cols": 4, "boundary": "obc" },
        "model": { "kind": "heisenberg" },
        "bond_dims": [2],
        "chis": [1, 2],
        "sweeps": sweeps
    });
    params.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    json!({ "schema_version": 1, "experiment": "vmc", "seed": 5, "params": params })
}

fn floquet_config(l: usize, t_max: usize) -> Value {
    json!({
        "schema_version": 1, "experiment": "floquet", "seed": 1,
        "params": { "l": l, "preset": "maximally_chaotic", "t_max": t_max, "chi": 2,
                    "methods": ["exact", "mps", "tnf-transverse", "tnf-inverse", "mpo"] }
    })
}

fn circuit_config(suites: Value) -> Value {
    json!({ "schema_version": 1, "experiment": "circuit", "seed": 3, "params": { "suites": suites } })
}

#[test]
fn zero_sweeps_rejected_with_path() {
    let e = config(vmc_config(0, json!({}))).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(matches!(&e, LabError::Config { path, .. } if path == "params.sweeps"), "{e}");
}

#[test]
fn schema_errors_carry_field_paths() {
    let mut v = vmc_config(10, json!({}));
    v["params"]["lattice"]["boundary"] = json!("twisted");
    let e = config(v).unwrap_err();
    assert!(matches!(&e, LabError::Config { path, .. } if path == "params.lattice.boundary"), "{e}");

    let mut v = vmc_config(10, json!({}));
    v["params"]["sweeeps"] = json!(3);
    assert!(matches!(config(v).unwrap_err(), LabError::Config { .. }));

    let mut v = vmc_config(10, json!({}));
    v.as_object_mut().unwrap().remove("seed");
    let e = config(v).unwrap_err();
    assert!(e.to_string().contains("seed"), "{e}");

    let mut v = vmc_config(10, json!({}));
    v["schema_version"] = json!(2);
    assert!(matches!(config(v).unwrap_err(), LabError::Config { path, .. } if path == "schema_version"));
}

#[test]
fn oversized_inputs_hit_resource_guards() {
    let mut v = vmc_config(10, json!({}));
    v["params"]["lattice"]["rows"] = json!(9);
    assert_eq!(config(v).unwrap_err().exit_code(), 3);
    assert_eq!(config(floquet_config(16, 2)).unwrap_err().exit_code(), 3);
    assert_eq!(config(circuit_config(json!([{ "kind": "adder", "bits": 9 }]))).unwrap_err().exit_code(), 3);
    let mut v = vmc_config(10, json!({ "ed": true }));
    v["params"]["lattice"]["rows"] = json!(5);
    assert_eq!(config(v).unwrap_err().exit_code(), 3);
}

#[test]
fn empty_circuit_suite_rejected() {
    let e = config(circuit_config(json!([]))).unwrap_err();
    assert!(matches!(&e, LabError::Config { path, .. } if path == "params.suites"));
}

#[test]
fn vmc_grid_fixed_points_respect_ed_bound() {
    let lattice = Lattice::new(4, 4, Boundary::Obc).unwrap();
    let e_ed = ground_state(&Model::heisenberg(lattice, 1.0), 8).unwrap().energy;
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(vmc_config(400, json!({ "modes": ["fixed", "dynamic"] }))).unwrap();
    let m = run(&cfg, dir.path()).unwrap();
    assert!(m.files.iter().any(|f| f.name == "energies.csv"));
    let rows = csv_rows(&read(dir.path(), "energies.csv"));
    assert_eq!(rows.len(), 4);
    for r in rows.iter().filter(|r| r[2] == "fixed") {
        let (mean, se): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!(mean >= e_ed - 3.0 * se, "{r:?}");
        assert_eq!(r[12], "false");
        assert_eq!(r[11].parse::<f64>().unwrap(), e_ed);
    }
    let manifest: Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["config"]["seed"], json!(5));
    assert!(manifest["timings"].as_array().unwrap().len() >= 3);
}

#[test]
fn vmc_reruns_are_byte_identical() {
    let cfg = config(vmc_config(150, json!({ "chains": 2, "modes": ["fixed", "dynamic"] }))).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&cfg, a.path()).unwrap();
    run(&cfg, b.path()).unwrap();
    for f in ["energies.csv", "reference.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
}

#[test]
fn floquet_zero_time_gives_one_unentangled_row() {
    let dir = tempfile::tempdir().unwrap();
    run(&config(floquet_config(6, 0)).unwrap(), dir.path()).unwrap();
    let text = read(dir.path(), "entropy.csv");
    assert_eq!(text.lines().next().unwrap(), "t,exact,conventional,transverse,inverse-time,mpo-mpo");
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    for s in &rows[0][1..] {
        assert!(s.parse::<f64>().unwrap().abs() < 1e-12);
    }
}

#[test]
fn floquet_series_are_aligned_and_reproducible() {
    let cfg = config(floquet_config(8, 5)).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let m = run(&cfg, a.path()).unwrap();
    run(&cfg, b.path()).unwrap();
    assert_eq!(csv_rows(&read(a.path(), "entropy.csv")).len(), 6);
    for f in &m.files {
        assert_eq!(read(a.path(), &f.name), read(b.path(), &f.name), "{}", f.name);
    }
    let spectrum = csv_rows(&read(a.path(), "spectrum_exact.csv"));
    assert_eq!(spectrum.len(), 6 * 16);
}

#[test]
fn circuit_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(circuit_config(json!([
        { "kind": "multiplier", "bits": 5 },
        { "kind": "fnn", "widths": [3, 4, 2], "coefficients": [0.0, 1.0, 0.5] }
    ])))
    .unwrap();
    run(&cfg, dir.path()).unwrap();
    let report: Value = serde_json::from_str(&read(dir.path(), "results.json")).unwrap();
    assert_eq!(report["passed"], json!(true));
    let mult = &report["suites"][0];
    // Every (m, n) width pair up to 5 bits, exhaustively.
    let cases: u64 = (1..=5).flat_map(|m| (1..=5).map(move |n| 1u64 << (m + n))).sum();
    assert_eq!(mult["cases"], json!(cases));
    assert_eq!(mult["errors"], json!(0));
    let fnn = &report["suites"][1];
    assert!(fnn["max_abs_error"].as_f64().unwrap() < 1e-12);
    assert!(fnn["memo_contractions"].as_u64().unwrap() <= fnn["graph_nodes"].as_u64().unwrap());
}

#[test]
fn single_point_pareto_grid_is_its_own_frontier() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(json!({
        "schema_version": 1, "experiment": "pareto", "seed": 2,
        "params": {
            "lattice": { "rows": 3, "cols": 3, "boundary": "obc" },
            "model": { "kind": "heisenberg" },
            "bond_dims": [2], "chis": [2],
            "iterations": 3, "learning_rate": 0.05,
            "gradient": { "sampling": "monte_carlo", "sweeps": 30 },
            "eval_sweeps": 100, "cost_samples": 4
        }
    }))
    .unwrap();
    let m = run(&cfg, dir.path()).unwrap();
    let all = csv_rows(&read(dir.path(), "pareto.csv"));
    let front = csv_rows(&read(dir.path(), "frontier.csv"));
    assert_eq!(all.len(), 1);
    assert_eq!(front, all);
    assert_eq!(all[0][7], "true");
    assert_eq!(csv_rows(&read(dir.path(), "sgd_trace.csv")).len(), 3);
    assert!(m.measurements["amplitude_wall_clock"].as_array().unwrap().len() == 1);
}

#[test]
fn error_kinds_map_to_exit_codes() {
    use tnf_core::TnfError;
    assert_eq!(LabError::config("x", "y").exit_code(), 2);
    assert_eq!(LabError::Core(TnfError::Resource("big".into())).exit_code(), 3);
    assert_eq!(LabError::Core(TnfError::Numerical("diverged".into())).exit_code(), 4);
    assert_eq!(LabError::Core(TnfError::Internal("bug".into())).exit_code(), 1);
}

fn write_config(dir: &Path, v: &Value) -> std::path::PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

#[test]
fn binary_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_tnf-lab");
    let out = dir.path().join("out");

    let p = write_config(dir.path(), &circuit_config(json!([{ "kind": "square", "bits": 3 }])));
    let st = Command::new(exe).args(["circuit", "--config"]).arg(&p).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(out.join("manifest.json").exists());

    // Kind mismatch between subcommand and config.
    let st = Command::new(exe).args(["vmc", "--config"]).arg(&p).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(2));

    let p = write_config(dir.path(), &circuit_config(json!([{ "kind": "adder", "bits": 12 }])));
    let st = Command::new(exe).args(["circuit", "--config"]).arg(&p).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(3));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_tnf-lab");
    let p = write_config(dir.path(), &circuit_config(json!([{ "kind": "fnn", "widths": [1, 1], "coefficients": [0.0, 1.0], "samples": 3 }])));
    let out = dir.path().join("out");
    let st = Command::new(exe)
        .args(["circuit", "--seed", "99", "--threads", "2", "--config"])
        .arg(&p)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let manifest: Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(manifest["config"]["seed"], json!(99));
    assert_eq!(manifest["config"]["threads"], json!(2));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 4);
}
