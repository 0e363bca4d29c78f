use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vortex_opt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortex-opt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

const SMALL_DISK: &str = "\
shape = disk
shape.radius = 2
target_h = 0.2
alpha = 2
beta = 1
area_A = fraction:0.25
mode = maximize
initializer = random
seeds = 0, 1
";

#[test]
fn oracle_prints_closed_form_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "oracle.conf",
        "mode = oracle\nrings = (1, 2), (2, 1)\n",
    );
    let out = vortex_opt(&[&cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("psi = 13.262464577812"), "{stdout}");
    assert!(out_dir.join("report.txt").exists());
    assert!(!out_dir.join("mesh.node").exists());
}

#[test]
fn contrast_violation_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.conf",
        &SMALL_DISK.replace("alpha = 2", "alpha = 1").replace("beta = 1", "beta = 2"),
    );
    let out = vortex_opt(&[&cfg, "--output-dir", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("alpha = 1 must exceed beta = 2"), "{stderr}");
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.conf", &format!("{SMALL_DISK}speed = 3\n"));
    let out = vortex_opt(&[&cfg]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("unknown key 'speed'"), "{stderr}");
    assert!(stderr.contains("bad.conf"), "{stderr}");

    let out = vortex_opt(&[dir.path().join("missing.conf").to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn seed_count_and_quiet() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), "disk.conf", SMALL_DISK);
    let out = vortex_opt(&[
        &cfg,
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--seed-count",
        "3",
        "--quiet",
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    for seed in 0..3 {
        assert!(out_dir.join(format!("trace_seed{seed}.csv")).exists());
    }
    let report = fs::read_to_string(out_dir.join("report.txt")).unwrap();
    assert!(report.contains("config.seeds = 0, 1, 2"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "disk.conf", SMALL_DISK);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(vortex_opt(&[&cfg, "--output-dir", a.to_str().unwrap(), "--quiet"]).status.success());
    assert!(vortex_opt(&[&cfg, "--output-dir", b.to_str().unwrap(), "--quiet"]).status.success());
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() > 5);
    for name in names {
        if name == "report.txt" {
            continue;
        }
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn report_psi_matches_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), "disk.conf", SMALL_DISK);
    assert!(vortex_opt(&[&cfg, "--output-dir", out_dir.to_str().unwrap(), "--quiet"]).status.success());
    let report = fs::read_to_string(out_dir.join("report.txt")).unwrap();
    let psi = report
        .lines()
        .find_map(|l| l.strip_prefix("run.0.psi = "))
        .unwrap();
    let trace = fs::read_to_string(out_dir.join("trace_seed0.csv")).unwrap();
    let last = trace.lines().rfind(|l| !l.starts_with('#')).unwrap();
    assert_eq!(last.split(',').nth(1).unwrap(), psi);
}
