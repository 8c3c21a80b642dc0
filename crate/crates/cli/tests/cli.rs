//! End-to-end runs of the `corrdyn` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_corrdyn"))
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(sub: &str, config: &Path, out: &Path) -> Output {
    bin()
        .args([sub, config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

const TWO_SPIN: &str = r#"{
  "sites": 2,
  "fields": [[0.8, 0, 0], [0.6, 0, 0]],
  "couplings": [{"i": 0, "j": 1, "tensor": [[0,0,0],[0,0,0],[0,0,1.0]]}],
  "initial_state": {"named": {"name": "cat", "phase": 0.0}},
  "time": {"t_max": 2.0, "stride": 20},
  "observables": ["x0", "z0 z1", "+0"],
  "tasks": ["evolve", "spectrum", "resolvent", "decompose", "validate"],
  "resolvent": {"z": [[1.0, 0.0], [0.3, 0.7]]}
}"#;

#[test]
fn two_spin_spectrum_lists_the_four_frequencies() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), TWO_SPIN);
    let out = run("spectrum", &cfg, tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(tmp.path(), "spectrum.csv");
    assert!(text.starts_with("omega,multiplicity\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows[0][0], 0.0);
    let e1 = 0.5 * 2.96f64.sqrt();
    let e2 = 0.5 * 1.04f64.sqrt();
    let mut expected = [e1 - e2, e1 + e2, 2.0 * e1, 2.0 * e2];
    expected.sort_by(f64::total_cmp);
    assert_eq!(rows.len(), 5);
    for (row, w) in rows[1..].iter().zip(expected) {
        assert!((row[0] - w).abs() < 1e-10);
    }
    assert!(tmp.path().join("spectral_density.csv").exists());
    assert!(!tmp.path().join("trajectory.csv").exists());
}

#[test]
fn free_spin_larmor_trace() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"sites": 1, "fields": [[0, 0, 1.5]], "initial_state": {"product": [[1, 0, 0]]},
            "time": {"t_max": 4.0, "stride": 10}, "observables": ["x0", "y0"]}"#,
    );
    let out = run("run", &cfg, tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(tmp.path(), "trajectory.csv");
    assert!(text.starts_with("t,x0,y0\n"));
    let rows = csv_rows(&text);
    assert!((rows.last().unwrap()[0] - 4.0).abs() < 1e-12);
    for r in rows {
        assert!((r[1] - (1.5 * r[0]).cos()).abs() < 1e-8);
        assert!((r[2] - (1.5 * r[0]).sin()).abs() < 1e-8);
    }
}

#[test]
fn validate_three_sites() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"sites": 3,
            "fields": [[0.3, -0.2, 1.0], [0.5, 0.1, -0.4], [-0.7, 0.2, 0.3]],
            "couplings": [
              {"i": 0, "j": 1, "tensor": [[0.4, 0.1, 0], [0, 0.3, 0.2], [0.1, 0, 0.5]]},
              {"i": 1, "j": 2, "tensor": [[0.2, 0, 0], [0, 0.2, 0], [0, 0, -0.6]]}],
            "initial_state": {"named": {"name": "random_pure"}},
            "seed": 7,
            "time": {"t_max": 10.0, "stride": 50}}"#,
    );
    let out = run("validate", &cfg, tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(tmp.path(), "validate.txt");
    let dev: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max_deviation="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(dev < 1e-6, "{text}");
    assert!(text.contains("status=PASS"));
}

#[test]
fn all_tasks_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), TWO_SPIN);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let first = run("run", &cfg, &a);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let second = bin()
        .env("CORRDYN_THREADS", "1")
        .args(["run", cfg.to_str().unwrap(), "--out-dir", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(second.status.success());
    for name in [
        "trajectory.csv",
        "spectrum.csv",
        "spectral_density.csv",
        "spectrum_info.txt",
        "resolvent.csv",
        "decomposition.txt",
        "validate.txt",
    ] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let header = read(&a, "trajectory.csv").lines().next().unwrap().to_string();
    assert_eq!(header, "t,x0,z0 z1,+0.re,+0.im");
    let resolvent = read(&a, "resolvent.csv");
    assert!(resolvent.contains(",0,0,I,I,1.0000000000000000e0,0.0000000000000000e0"));
}

#[test]
fn decomposition_of_mixed_example() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"sites": 2, "initial_state": {"named": {"name": "mixed_example"}},
            "observables": ["x0 x1", "x0 z1"], "tasks": ["decompose"]}"#,
    );
    let out = run("run", &cfg, tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(tmp.path(), "decomposition.txt");
    assert!(text.contains("connected[x0 x1]=2.5000000000000000e-1"), "{text}");
    assert!(text.contains("connected[x0 z1]=-2.5000000000000000e-1"), "{text}");
    assert!(text.contains("subset_expansion.terms=2"));
    assert!(text.contains("positive=true"));
}

fn expect_failure(body: &str, sub: &str, code: i32) {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), body);
    let out = run(sub, &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(code), "{body}: {}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error:"), "{stderr}");
}

#[test]
fn exit_codes() {
    expect_failure("{ not json", "run", 2);
    expect_failure(r#"{"sites": 2, "observables": ["z0 z0"]}"#, "run", 2);
    expect_failure(
        r#"{"sites": 1, "fields": [[0,0,5]], "initial_state": {"product": [[1,0,0]]},
            "time": {"t_max": 1, "dt": 0.5}}"#,
        "run",
        3,
    );
    expect_failure(
        r#"{"sites": 1, "fields": [[0,0,2]], "tasks": ["resolvent"], "resolvent": {"z": [[0, 2]]}}"#,
        "run",
        3,
    );
    expect_failure(r#"{"sites": 7, "tasks": ["spectrum"]}"#, "run", 4);
    expect_failure(
        r#"{"sites": 9, "initial_state": {"named": {"name": "ghz"}}, "tasks": ["decompose"]}"#,
        "run",
        4,
    );

    let tmp = TempDir::new().unwrap();
    let out = run("run", &tmp.path().join("missing.json"), tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
}
