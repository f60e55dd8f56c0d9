use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mongeo::io::GridData;
use mongeo::{MonotoneMap, PathGrid, SpaceGrid, TimeGrid};
use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn mongeo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mongeo")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_map(dir: &Path, name: &str, n: usize, f: impl Fn(f64) -> f64) {
    let map = MonotoneMap::from_fn(SpaceGrid::new(n).unwrap(), f).unwrap();
    fs::write(dir.join(name), GridData::from_map(&map).to_csv()).unwrap();
}

fn write_row(dir: &Path, name: &str, row: &[f64]) {
    fs::write(dir.join(name), GridData::from_row(row).to_csv()).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn inputs() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_map(dir.path(), "id.csv", 32, |x| x);
    write_map(dir.path(), "sq.csv", 32, |x| x * x);
    dir
}

fn check_manifest(dir: &Path) -> Value {
    let manifest = read_json(&dir.join("manifest.json"));
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert!(!artifacts.is_empty());
    for a in artifacts {
        let bytes = fs::read(dir.join(a["file"].as_str().unwrap())).unwrap();
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(a["sha256"].as_str().unwrap(), hex);
    }
    // every file in the directory is listed
    for entry in fs::read_dir(dir).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name != "manifest.json" {
            assert!(artifacts.iter().any(|a| a["file"] == name.as_str()), "{name} missing from manifest");
        }
    }
    manifest
}

#[test]
fn geodesic_artifacts_are_complete_and_deterministic() {
    let dir = inputs();
    let run = |out: &str| mongeo(dir.path(), &["geodesic", "--from", "id.csv", "--to", "sq.csv", "--nt", "16", "--out", out]);
    let first = run("a");
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert_eq!(code(&run("b")), 0);
    for name in ["path.csv", "result.json", "snapshots.svg", "manifest.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    let manifest = check_manifest(&dir.path().join("a"));
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["config"]["nt"], 16);
    let result = read_json(&dir.path().join("a/result.json"));
    assert_eq!(result["converged"], true);
    let d = result["distance"].as_f64().unwrap();
    assert!(d > 0.3 && d < 0.45, "{d}");
    let svg = fs::read_to_string(dir.path().join("a/snapshots.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 9);
    let path = GridData::from_csv(&fs::read_to_string(dir.path().join("a/path.csv")).unwrap()).unwrap();
    assert_eq!((path.n, path.m), (32, 16));
}

#[test]
fn non_monotone_input_exits_2_naming_row_and_column() {
    let dir = inputs();
    let mut bad: Vec<f64> = (0..=16).map(|j| j as f64 / 16.0).collect();
    bad[5] = 0.9;
    write_row(dir.path(), "bad.csv", &bad);
    let out = mongeo(dir.path(), &["geodesic", "--from", "bad.csv", "--to", "sq.csv"]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("row 0") && msg.contains("column 6"), "{msg}");
    assert!(!dir.path().join("out").exists());

    fs::write(dir.path().join("garbled.csv"), "# mongeo v1, n=2, m=0, T=0\n0,abc,1\n").unwrap();
    let out = mongeo(dir.path(), &["hellinger", "--from", "garbled.csv", "--to", "id.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("row 0, column 1"), "{}", stderr(&out));

    let out = mongeo(dir.path(), &["geodesic", "--from", "missing.csv", "--to", "sq.csv"]);
    assert_eq!(code(&out), 2);
    let out = mongeo(dir.path(), &["geodesic", "--from", "id.csv", "--to", "sq.csv", "--nt", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn blowup_exits_3_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let n = 64;
    let v0: Vec<f64> = (0..=n)
        .map(|j| {
            let x = j as f64 / n as f64;
            let d = (x - 0.5) / 0.05;
            -3.0 * d * (-d * d).exp()
        })
        .collect();
    let mut v0 = v0;
    v0[0] = 0.0;
    v0[n] = 0.0;
    write_row(dir.path(), "v0.csv", &v0);
    let out = mongeo(dir.path(), &["evolve", "--v0", "v0.csv", "-T", "3", "--nt", "200"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let trace = fs::read_to_string(dir.path().join("out/energy.csv")).unwrap();
    assert!(trace.lines().last().unwrap().starts_with("# truncated after"));
    let manifest = check_manifest(&dir.path().join("out"));
    assert!(manifest["status"].as_str().unwrap().starts_with("incomplete"));
    let field = GridData::from_csv(&fs::read_to_string(dir.path().join("out/velocity.csv")).unwrap()).unwrap();
    assert!(field.m < 200);
}

#[test]
fn smooth_evolution_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let n = 128;
    let v0: Vec<f64> = (0..=n).map(|j| 0.1 * (std::f64::consts::PI * j as f64 / n as f64).sin()).collect();
    write_row(dir.path(), "v0.csv", &v0);
    let out = mongeo(dir.path(), &["certify", "--v0", "v0.csv", "-T", "0.3", "--nt", "64", "--out", "c"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let cert = read_json(&dir.path().join("c/certificate.json"));
    assert_eq!(cert["verdict"], "strict_minimizer");
    assert_eq!(cert["flagged_non_solution"], false);
    assert_eq!(cert["T"], 0.3);
    check_manifest(&dir.path().join("c"));

    // the initial profile frozen in time is not a solution
    let frozen = PathGrid::from_fn(TimeGrid::new(64, 0.3).unwrap(), SpaceGrid::new(n).unwrap(), |_, x| x).unwrap();
    let mut data = GridData::from_path(&frozen);
    for mut row in data.values.rows_mut() {
        row.assign(&ndarray_row(&v0));
    }
    fs::write(dir.path().join("frozen.csv"), data.to_csv()).unwrap();
    let out = mongeo(dir.path(), &["certify", "--field", "frozen.csv", "--out", "f"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("does not look like a solution"));
    assert_eq!(read_json(&dir.path().join("f/certificate.json"))["flagged_non_solution"], true);

    let zero = vec![0.0; 33];
    write_row(dir.path(), "zero.csv", &zero);
    let out = mongeo(dir.path(), &["certify", "--v0", "zero.csv", "-T", "1000", "--nt", "8", "--out", "z"]);
    assert_eq!(code(&out), 0);
    assert_eq!(read_json(&dir.path().join("z/certificate.json"))["verdict"], "strict_minimizer");
}

fn ndarray_row(v: &[f64]) -> ndarray::Array1<f64> {
    ndarray::Array1::from(v.to_vec())
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = inputs();
    fs::write(
        dir.path().join("run.json"),
        r#"{"from": "id.csv", "to": "sq.csv", "nt": 8, "init": "linear", "out": "from_config"}"#,
    )
    .unwrap();
    let out = mongeo(dir.path(), &["geodesic", "--config", "run.json", "--nt", "4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest = read_json(&dir.path().join("from_config/manifest.json"));
    assert_eq!(manifest["config"]["nt"], 4);
    assert_eq!(manifest["config"]["init"], "linear");
    assert_eq!(manifest["config"]["max_iters"], 5000);

    fs::write(dir.path().join("broken.json"), "{ nt: 4").unwrap();
    let out = mongeo(dir.path(), &["geodesic", "--config", "broken.json"]);
    assert_eq!(code(&out), 2);
    fs::write(dir.path().join("typed.json"), r#"{"nt": "many"}"#).unwrap();
    let out = mongeo(dir.path(), &["geodesic", "--config", "typed.json", "--from", "id.csv", "--to", "sq.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn hellinger_and_energy_agree() {
    let dir = inputs();
    let out = mongeo(dir.path(), &["hellinger", "--from", "id.csv", "--to", "sq.csv", "--steps", "16", "--out", "h"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&dir.path().join("h/report.json"));
    assert_eq!(report["within_bound"], true);
    let out = mongeo(dir.path(), &["energy", "--path", "h/path.csv", "--out", "e"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let energy = read_json(&dir.path().join("e/energy.json"));
    assert_eq!(energy["total"], report["energy"]["total"]);
    let out = mongeo(dir.path(), &["energy", "--path", "h/path.csv", "--velocity", "h/path.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn fill_removes_a_static_jump() {
    let dir = tempfile::tempdir().unwrap();
    let (n, m) = (64, 4);
    let sg = SpaceGrid::new(n).unwrap();
    let c = sg.cell_of(0.5);
    let (xc, xc1) = (sg.node(c), sg.node(c + 1));
    let path = PathGrid::from_fn(TimeGrid::unit(m).unwrap(), sg, |_, x| {
        if x <= xc {
            0.35 * x / xc
        } else {
            0.65 + 0.35 * (x - xc1) / (1.0 - xc1)
        }
    })
    .unwrap();
    fs::write(dir.path().join("jumpy.csv"), GridData::from_path(&path).to_csv()).unwrap();
    fs::write(dir.path().join("jumps.json"), r#"{"locations": [0.5]}"#).unwrap();
    let out = mongeo(dir.path(), &["fill", "--path", "jumpy.csv", "--jumps", "jumps.json", "--eps", "0.15"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&dir.path().join("out/report.json"));
    assert!(report["max_increment"].as_f64().unwrap() <= 3.0 * report["h_out"].as_f64().unwrap());
    let out = mongeo(dir.path(), &["energy", "--path", "jumpy.csv", "--jumps", "jumps.json", "--out", "e"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    check_manifest(&dir.path().join("out"));
}

#[test]
fn collapse_demo_writes_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = mongeo(dir.path(), &["demo", "collapse", "--nx", "256", "--nt", "200"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let demo = read_json(&dir.path().join("out/collapse.json"));
    assert_eq!(demo["resting_drift"], 0.0);
    assert!(demo["arrival_time"].as_f64().is_some());
    check_manifest(&dir.path().join("out"));
    let out = mongeo(dir.path(), &["demo", "collapse", "--nx", "255"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn thread_cap_is_validated() {
    let dir = inputs();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_mongeo"))
            .current_dir(dir.path())
            .env("MONGEO_THREADS", threads)
            .args(["hellinger", "--from", "id.csv", "--to", "sq.csv", "--out", threads])
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("lots")), 2);
    assert_eq!(code(&run("0")), 2);
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("3")), 0);
    assert_eq!(fs::read(dir.path().join("1/path.csv")).unwrap(), fs::read(dir.path().join("3/path.csv")).unwrap());
}
