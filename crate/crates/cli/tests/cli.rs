//! End-to-end tests of the `cutplate` binary: artifact layout, config
//! precedence, exit codes, and the byte-determinism contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cutplate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutplate"))
        .args(args)
        .env_remove("CUTPLATE_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("{name} exists"))
}

#[test]
fn two_level_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = cutplate(&["--levels", "2", "--out", out]);
    assert!(res.status.success(), "stderr: {}", stderr(&res));

    let csv = read(dir.path(), "convergence.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(
        lines[0],
        "level,h,n_dofs,errL2,errH1,errH2b,errEnergy,rateL2,rateH1,rateH2b,rateEnergy,cond_estimate,solve_seconds"
    );
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&first[7..11], &["", "", "", ""]);
    let second: Vec<&str> = lines[2].split(',').collect();
    assert!(second[7].parse::<f64>().unwrap() > 3.0);

    let log = read(dir.path(), "run.log");
    assert!(log.contains("E = 100"));
    assert!(log.contains("levels = 2"));
    assert!(log.contains("level 0:"));
    assert!(log.contains("level 1:"));
    assert!(dir.path().join("solution_0.txt").exists());
    assert!(dir.path().join("solution_1.txt").exists());
    assert!(!dir.path().join("plot.gp").exists());
}

#[test]
fn single_level_run_leaves_rate_cells_empty_and_emits_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = cutplate(&["--levels", "1", "--emit-plot", "--out", out]);
    assert!(res.status.success(), "stderr: {}", stderr(&res));

    let csv = read(dir.path(), "convergence.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&row[7..11], &["", "", "", ""]);

    let gp = read(dir.path(), "plot.gp");
    assert!(gp.contains("set logscale xy"));
    assert!(gp.contains("convergence.csv"));
}

#[test]
fn zero_penalty_fails_as_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = cutplate(&["--gamma-scale", "0", "--levels", "1", "--out", out]);
    assert_eq!(res.status.code(), Some(3));
    assert!(stderr(&res).contains("NotPositiveDefinite"));
}

#[test]
fn coarse_grid_fails_as_a_geometry_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = cutplate(&["--h-start", "0.5", "--levels", "1", "--out", out]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("NoInteriorCell"));
}

#[test]
fn config_errors_exit_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "bogus = 1\n").unwrap();
    let res = cutplate(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4));
    assert!(stderr(&res).contains("UnknownKey"));

    // Finest level below the desk-scale limit.
    let res = cutplate(&["--levels", "12"]);
    assert_eq!(res.status.code(), Some(4));
    assert!(stderr(&res).contains("InvalidValue"));

    // Unknown flag (usage error).
    let res = cutplate(&["--frobnicate"]);
    assert_eq!(res.status.code(), Some(4));

    // Missing config file.
    let res = cutplate(&["--config", dir.path().join("absent.cfg").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "E = 50\nlevels = 1\n").unwrap();
    let out = dir.path().join("out");
    let res = cutplate(&[
        "--config",
        cfg.to_str().unwrap(),
        "--levels",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", stderr(&res));
    let csv = read(&out, "convergence.csv");
    assert_eq!(csv.lines().count(), 3);
    let log = read(&out, "run.log");
    assert!(log.contains("E = 50"));
    assert!(log.contains("levels = 2"));
}

#[test]
fn reruns_byte_reproduce_everything_but_timing() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> String {
        let out = dir.path().join(name);
        let res = cutplate(&["--levels", "2", "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "stderr: {}", stderr(&res));
        read(&out, "convergence.csv")
    };
    let strip_timing = |csv: &str| -> String {
        csv.lines()
            .map(|l| l.rsplit_once(',').expect("csv row").0.to_string())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(strip_timing(&a), strip_timing(&b));
}

#[test]
fn thread_cap_is_validated_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_cutplate"))
        .args(["--levels", "1", "--out", out])
        .env("CUTPLATE_THREADS", "3")
        .output()
        .unwrap();
    assert!(res.status.success());
    assert!(read(dir.path(), "run.log").contains("threads = 3"));

    let res = Command::new(env!("CARGO_BIN_EXE_cutplate"))
        .args(["--levels", "1", "--out", out])
        .env("CUTPLATE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(4));
}
