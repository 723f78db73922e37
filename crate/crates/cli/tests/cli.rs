//! End-to-end tests of the binary: exit codes, file schemas, determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavedecay"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn certificate_constant_anchor() {
    let out = run(&["certificate", "--sigma0", "2", "--sigma1", "2", "--lambda1", "9.8696044"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["alpha_star"].as_f64().unwrap() - 0.84085).abs() < 1e-4);
    assert_eq!(v["regime"], "unique_max");
    assert_eq!(v["lambda1_provenance"], "user-supplied");
    for field in [
        "sigma0",
        "sigma1",
        "lambda1",
        "lambda1_provenance",
        "eps_star",
        "eta_star",
        "alpha_star",
        "discriminant",
        "regime",
        "critical_points",
        "f_at_star",
        "g_at_star",
    ] {
        assert!(v.get(field).is_some(), "missing field {field}");
    }
}

#[test]
fn certificate_from_interval() {
    let out = run(&["certificate", "--sigma0", "1", "--sigma1", "2", "--interval-length", "1"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["lambda1"].as_f64().unwrap() - std::f64::consts::PI.powi(2)).abs() < 1e-12);
    assert!((v["alpha_star"].as_f64().unwrap() - 0.38217).abs() < 1e-4);
    assert_eq!(v["lambda1_provenance"], "analytic");
}

#[test]
fn certificate_discrete_interval_is_conservative() {
    let out = run(&[
        "certificate",
        "--sigma0",
        "1",
        "--sigma1",
        "2",
        "--interval-length",
        "1",
        "--discrete",
        "--points",
        "199",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["lambda1_provenance"], "discrete");
    let lam = v["lambda1"].as_f64().unwrap();
    assert!(lam < std::f64::consts::PI.powi(2) && lam > 9.86);
}

#[test]
fn certificate_rejects_swapped_bounds() {
    let out = run(&["certificate", "--sigma0", "2", "--sigma1", "1", "--lambda1", "1"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sigma1 < sigma0"), "stderr: {err}");
    assert_eq!(err.trim().lines().count(), 1, "diagnostic must be one line");
}

#[test]
fn certificate_requires_a_lambda_source() {
    let out = run(&["certificate", "--sigma0", "1", "--sigma1", "2"]);
    assert_eq!(code(&out), 2);
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const CONSTANT_RUN: &str = "\
domain.length = 1
grid.points = 100
damping.kind = constant
damping.value = 2
bounds.sigma0 = 2
bounds.sigma1 = 2
run.t_end = 3
run.sample_every = 5
output.trace = trace.csv
output.report = report.json
";

#[test]
fn simulate_certifies_constant_damping_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.conf", CONSTANT_RUN);

    let out = run(&["simulate", &cfg]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("t,energy_total,energy_grad,energy_v"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,"), "first sample at t = 0: {first}");
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["report"]["verdict"], "decay_certified");
    assert!(v["report"]["max_bound_ratio"].as_f64().unwrap() <= 1.02);
    assert!(v["certificate"]["alpha_star"].as_f64().unwrap() > 0.84);
    assert!(v["initial_energy_bound"].as_f64().unwrap() > 0.0);

    // byte-identical rerun
    let out2 = run(&["simulate", &cfg]);
    assert_eq!(code(&out2), 0);
    assert_eq!(trace, fs::read_to_string(dir.path().join("trace.csv")).unwrap());
    assert_eq!(report, fs::read_to_string(dir.path().join("report.json")).unwrap());
}

#[test]
fn simulate_counterexample_growth_and_expectation_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "growth.conf",
        "damping.kind = counterexample\ngrid.points = 150\nrun.t_end = 4\n\
         run.sample_every = 20\noutput.trace = g.csv\noutput.report = g.json\n",
    );
    let out = run(&["simulate", &cfg, "--expect-growth"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(v["report"]["verdict"], "growth_detected");
    assert!(v["certificate"].is_null());
    assert!(v["lambda1"].is_null());

    let out = run(&["simulate", &cfg]);
    assert_eq!(code(&out), 1, "growth without the flag is a failed certification");
}

#[test]
fn simulate_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.conf", "domain.length = 1\nnot.a.key = 2\n");
    let out = run(&["simulate", &cfg]);
    assert_eq!(code(&out), 2);

    let cfg = write_config(dir.path(), "dup.conf", "run.t_end = 1\nrun.t_end = 2\n");
    let out = run(&["simulate", &cfg]);
    assert_eq!(code(&out), 2);

    let out = run(&["simulate", dir.path().join("missing.conf").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulate_cfl_violation_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfl.conf",
        "domain.length = 1\ngrid.points = 50\ndamping.kind = constant\ndamping.value = 2\n\
         bounds.sigma0 = 2\nbounds.sigma1 = 2\nrun.t_end = 1\nrun.cfl_factor = 2.0\n",
    );
    let out = run(&["simulate", &cfg]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("CFL"));
}

#[test]
fn simulate_damping_outside_declared_bounds_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "oob.conf",
        "domain.length = 1\ngrid.points = 50\ndamping.kind = sinusoidal\ndamping.c0 = 1.5\n\
         damping.c1 = 1.0\ndamping.omega = 6.28\nbounds.sigma0 = 1\nbounds.sigma1 = 2\n\
         run.t_end = 2\neps.policy = value\neps.value = 0.3\n",
    );
    let out = run(&["simulate", &cfg]);
    assert_eq!(code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside declared bounds"));
}

#[test]
fn simulate_tabulated_damping() {
    let dir = tempfile::tempdir().unwrap();
    let nodes = 50;
    let mut table = String::new();
    for (t, v) in [(0.0, 1.0), (1.0, 2.0)] {
        let row: Vec<String> = std::iter::once(t.to_string())
            .chain((0..nodes).map(|_| v.to_string()))
            .collect();
        table.push_str(&row.join(","));
        table.push('\n');
    }
    fs::write(dir.path().join("sigma.csv"), table).unwrap();
    let cfg = write_config(
        dir.path(),
        "tab.conf",
        "domain.length = 1\ngrid.points = 50\ndamping.kind = tabulated\n\
         damping.table = sigma.csv\nbounds.sigma0 = 1\nbounds.sigma1 = 2\n\
         run.t_end = 3\noutput.trace = t.csv\noutput.report = r.json\n",
    );
    let out = run(&["simulate", &cfg]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(v["report"]["verdict"], "decay_certified");
}

#[test]
fn sweep_single_tuple_matches_certificate() {
    let out = run(&["sweep", "--sigma0", "1", "--sigma1", "2", "--lambda1", "9.8696044"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("sigma0,sigma1,lambda1,eps_star,alpha_star,discriminant,regime")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let cert = run(&["certificate", "--sigma0", "1", "--sigma1", "2", "--lambda1", "9.8696044"]);
    let v = stdout_json(&cert);
    assert_eq!(row[3].parse::<f64>().unwrap(), v["eps_star"].as_f64().unwrap());
    assert_eq!(row[4].parse::<f64>().unwrap(), v["alpha_star"].as_f64().unwrap());
    assert_eq!(row[6], v["regime"].as_str().unwrap());
}

#[test]
fn sweep_lambda_crossing_flips_the_regime() {
    let out = run(&["sweep", "--sigma0", "2", "--sigma1", "2", "--lambda1", "0.3:0.7:5"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let regimes: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(
        regimes,
        vec!["two_maxima", "two_maxima", "bifurcation", "unique_max", "unique_max"]
    );
}

#[test]
fn sweep_alpha_nonincreasing_in_sigma1() {
    let out = run(&["sweep", "--sigma0", "1", "--sigma1", "1:4:13", "--lambda1", "9.8696044"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let alphas: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(alphas.len(), 13);
    for w in alphas.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "alpha increased along sigma1: {alphas:?}");
    }
}

#[test]
fn sweep_rejects_bad_ranges() {
    let out = run(&["sweep", "--sigma0", "", "--sigma1", "2", "--lambda1", "1"]);
    assert_eq!(code(&out), 2);
    let out = run(&["sweep", "--sigma0", "1:2:0", "--sigma1", "2", "--lambda1", "1"]);
    assert_eq!(code(&out), 2);
    // a tuple with sigma1 < sigma0 is an input error
    let out = run(&["sweep", "--sigma0", "3", "--sigma1", "2", "--lambda1", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_rows_are_in_lexicographic_order() {
    let out = run(&["sweep", "--sigma0", "2,1", "--sigma1", "5", "--lambda1", "3,1,2"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let keys: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',');
            let s0: f64 = it.next().unwrap().parse().unwrap();
            it.next();
            let l1: f64 = it.next().unwrap().parse().unwrap();
            (s0, l1)
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
}
