use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run_with(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, format!("{config}\n[output]\ndir = {}\n", dir.join("out").display())).unwrap();
    Command::new(env!("CARGO_BIN_EXE_lpwave"))
        .arg("--config")
        .arg(&cfg)
        .arg("--quiet")
        .args(extra)
        .output()
        .unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn undamped_energy_is_conserved() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "[run]\ncommand = simulate\n[grid]\nn_cells = 128\n[time]\nt_end = 3\n[damping]\nkind = zero\n[initial]\ndata = mixed\n[energy]\np = 2",
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/energy.csv")).unwrap();
    assert!(csv.starts_with("t,p,E_p,calE_p,dissipation,overbar\n"));
    let e = column(&csv, "E_p");
    assert!(e.len() > 100);
    for v in &e {
        assert!((v - e[0]).abs() <= 1e-10 * e[0], "{v} vs {}", e[0]);
    }
}

#[test]
fn decay_reports_positive_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "[run]\ncommand = decay\n[grid]\nn_cells = 128\n[time]\nt_end = 20\n[damping]\nkind = bump\n[energy]\np = 2",
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/decay.csv")).unwrap();
    let g = column(&csv, "gamma_hat");
    assert_eq!(g.len(), 1);
    assert!(g[0] > 0.0);
}

#[test]
fn out_of_regime_alpha_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "[run]\ncommand = global-bound\n[grid]\nn_cells = 64\n[damping]\nkind = constant\nalpha = 3",
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn global_bound_holds() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "[run]\ncommand = global-bound\n[grid]\nn_cells = 64\n[time]\nt_end = 5\n[damping]\nkind = constant\nvalue = 2\nalpha = 0.5 1.0\n[energy]\np = 1.1 2",
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/global_bound.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), "[grid]\nn_cells = 1", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_cells"));
    let out = run_with(dir.path(), "[grid]\nn_cells = 8", &["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let config = "[run]\ncommand = verify-inequalities\n[inequalities]\nsamples = 2000\npolynomial_samples = 50\np_general = 2\np_modified = 1.5";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run_with(d.path(), config, &["--seed", "11"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("out/inequalities.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let meta = fs::read_to_string(a.path().join("out/run.meta")).unwrap();
    assert!(meta.contains("seed = 11"));

    let sim = "[grid]\nn_cells = 64\n[time]\nt_end = 2\n[energy]\np = 1.5 3";
    for d in [&a, &b] {
        assert_eq!(run_with(d.path(), sim, &["simulate"]).status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("out/energy.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn csv_floats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    run_with(dir.path(), "[grid]\nn_cells = 32\n[time]\nt_end = 0.5\n[energy]\np = 1.5", &["simulate"]);
    let csv = fs::read_to_string(dir.path().join("out/energy.csv")).unwrap();
    for cell in csv.lines().skip(1).flat_map(|l| l.split(',')) {
        let v: f64 = cell.parse().unwrap();
        assert_eq!(v.to_string(), cell);
    }
}

#[test]
fn plot_after_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let sim = "[grid]\nn_cells = 64\n[time]\nt_end = 4\n[energy]\np = 1.5 2 4";
    assert_eq!(run_with(dir.path(), sim, &["simulate"]).status.code(), Some(0));
    let out = run_with(dir.path(), sim, &["plot"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(dir.path().join("out/energy.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 3);
}

#[test]
fn oracle_compare_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        "[run]\ncommand = oracle-compare\n[oracle]\nn_list = 32 64 128\nt_end = 1",
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}
