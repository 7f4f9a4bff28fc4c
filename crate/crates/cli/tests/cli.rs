use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn swgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swgate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out_dir = dir.display().to_string();
    let mut all = vec!["run", "--output-dir", out_dir.as_str()];
    all.extend_from_slice(args);
    swgate(&all)
}

fn summary(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{name}.summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn presets_are_listed() {
    let out = swgate(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 9);
    for name in ["fig2a", "fig2b", "fig3", "fig4a", "fig4b", "tableB1", "figB1", "figB3", "bichromatic"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name}");
    }
}

#[test]
fn show_prints_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = swgate(&["show", "tableB1"]);
    assert!(out.status.success());
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let out = run_in(dir.path(), &["--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(swgate(&["show", "nope"]).status.code(), Some(2));
}

#[test]
fn error_budget_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--preset", "tableB1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for label in ["Visibility", "Phase carrier", "Phase sideband", "Ion spacing", "RD/BD phase mismatch", "Total"] {
        assert!(text.contains(label), "{label} missing from\n{text}");
    }
    assert!(text.contains("inferred by inverting"));
    let s = summary(dir.path(), "error-budget");
    assert_eq!(s["experiment"], "error-budget");
    assert!(s["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(s["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(s["config"]["experiment"], "error-budget");
    let csv = std::fs::read_to_string(dir.path().join("error-budget.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn sdf_curve_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--preset", "fig3", "--sdf.xs=[0.6]", "--sdf.durations=3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sdf-curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x_2omega_over_delta,sdf_tw_norm,sdf_sw_norm,sdf_tw_analytic"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    // floats carry nine significant digits
    assert_eq!(row[0], "6.00000000e-1");
    assert!(row.iter().all(|v| v.split('e').next().unwrap().replace(['.', '-'], "").len() == 9));
}

#[test]
fn fixed_seed_outputs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--preset", "figB1", "--seed", "7", "lock.duration=30"];
    assert!(run_in(a.path(), &args).status.success());
    assert!(run_in(b.path(), &args).status.success());
    let read = |d: &Path| std::fs::read(d.join("lock-sim.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_eq!(summary(a.path(), "lock-sim")["config"]["seed"], 7);
    let c = tempfile::tempdir().unwrap();
    assert!(run_in(c.path(), &["--preset", "figB1", "--seed", "8", "lock.duration=30"]).status.success());
    assert_ne!(read(a.path()), read(c.path()));
}

#[test]
fn phase_scan_overrides_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--preset", "fig2a", "--jobs", "1", "--scan.points=5", "params.n_ions=2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("phase-scan.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "dphi_rad,p11,p01+p10,p00");
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--preset", "tableB1", "--params.eta=0.6"],
        vec!["--preset", "tableB1", "params.eta=-1"],
        vec!["--preset", "tableB1", "--no_such_field=1"],
        vec!["--preset", "missing"],
        vec!["--preset", "fig2a", "scan.points"],
        vec![],
    ] {
        let out = run_in(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run_in(dir.path(), &["--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // a step-halving budget that cannot reach the tolerance
    let out = run_in(
        dir.path(),
        &[
            "--preset",
            "fig2a",
            "--scan.points=2",
            "--integrator={\"steps_per_period\":1,\"tol\":1e-15,\"max_refinements\":1}",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
