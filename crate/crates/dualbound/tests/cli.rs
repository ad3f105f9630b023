use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "profiles = [[5.0, 5.0, 1.0], [10.0, 2.0, 1.0]]\nhorizons = [1.0]\nn_paths = 300\n";

fn dualbound(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dualbound"));
    cmd.args(args).env_remove("DUALBOUND_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn bounds_writes_report_and_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = dualbound(
        &["bounds", "--config", &cfg, "--out", out.to_str().unwrap(), "--trajectories", "2"],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("bounds.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("profile,T,LB,CI_lo,CI_hi,UB,gap,CV,AL_bp,"));
    assert!(lines[1].starts_with("5_5,1,") && lines[2].starts_with("10_2,1,"));
    let traj = fs::read_to_string(out.join("trajectories_10_2_T1.csv")).unwrap();
    // Header plus two paths of 21 grid points.
    assert_eq!(traj.lines().count(), 1 + 2 * 21);
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["bounds", "--config", &cfg, "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert_eq!(dualbound(&args, &[]).status.code(), Some(0));
        fs::read(out.join("bounds.csv")).unwrap()
    };
    let a = run("a", &[]);
    assert_eq!(a, run("b", &["--parallel-cells"]));
    assert_ne!(a, run("c", &["--seed", "7"]));
}

#[test]
fn empty_profile_list_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "profiles = []\n");
    let o = dualbound(&["bounds", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("bounds.csv").exists());
}

#[test]
fn invalid_values_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["rho_sr = 1.5\n", "dt = 0.3\n", "n_paths = 1\n", "unknown = 1\n", "profiles = [[0.5, 2.0, 1.0]]\n"] {
        let cfg = config(dir.path(), text);
        let o = dualbound(&["paths", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
        assert_eq!(o.status.code(), Some(2), "{text}");
    }
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let out = dir.path().join("from_env");
    let o = dualbound(&["paths", "--config", &cfg, "--limit", "3"], &[("DUALBOUND_OUT", &out)]);
    assert_eq!(o.status.code(), Some(0));
    let paths = fs::read_to_string(out.join("paths.csv")).unwrap();
    assert_eq!(paths.lines().next(), Some("path,time,r,pi,log_Pi,log_M,log_B"));
    assert_eq!(paths.lines().count(), 1 + 3 * 21);
    assert!(paths.lines().nth(1).unwrap().starts_with("0,0,0.0326,0.054,0,0,0"));
}

#[test]
fn figures_writes_three_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let o = dualbound(&["figures", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let fig1 = fs::read_to_string(dir.path().join("fig1_utility.csv")).unwrap();
    assert!(fig1.lines().any(|l| l == "1,0,0"));
    let fig2 = fs::read_to_string(dir.path().join("fig2_allocation.csv")).unwrap();
    assert_eq!(fig2.lines().count(), 402);
    let fig3 = fs::read_to_string(dir.path().join("fig3_density.csv")).unwrap();
    assert_eq!(fig3.lines().count(), 513);
}

#[test]
fn failed_cell_is_reported_and_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    // The budget multiplier for this endowment lies outside the search bracket.
    let cfg = config(
        dir.path(),
        "profiles = [[10.0, 2.0, 1.0]]\nhorizons = [1.0, 2.0]\nn_paths = 100\nx0 = 1e12\n",
    );
    let o = dualbound(&["bounds", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3));
    let report = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(rows, ["10_2,1,,,,,,,,,,,,failed", "10_2,2,,,,,,,,,,,,failed"]);
}
