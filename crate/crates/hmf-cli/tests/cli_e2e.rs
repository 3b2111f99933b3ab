//! End-to-end exercises of the binary: exit codes, CSV schemas, determinism.

use std::path::Path;
use std::process::Output;

fn run_hmf(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_hmf"))
        .args(args)
        .output()
        .expect("hmf binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");

    // Unparseable file.
    write(&cfg, "job = ");
    let out = run_hmf(&["stability", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // Precondition violation with a field-level message.
    write(
        &cfg,
        "job = \"stability\"\n[state]\nkind = \"thermal_homogeneous\"\nt = -0.4\n",
    );
    let out = run_hmf(&["stability", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("temperature"), "stderr: {err}");

    // Job kind mismatch.
    write(&cfg, "job = \"check\"\n");
    let out = run_hmf(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // Missing file.
    let out = run_hmf(&["stability", "--config", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn conservation_abort_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("abort.toml");
    // A thin momentum box under a magnetized kick loses ~13% of its mass
    // through the boundary in one step, tripping the abort threshold.
    write(
        &cfg,
        &format!(
            "job = \"simulate\"\nout_dir = \"{}\"\n\n[state]\nkind = \"thermal_inhomogeneous\"\nt = 0.4\nmu = 1e-4\n\n[grid]\nnq = 64\nnp = 64\np_max = 0.5\n\n[time]\ndt = 0.5\nt_end = 10.0\n",
            dir.path().display()
        ),
    );
    let out = run_hmf(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn simulate_csv_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.toml");
    let mut bytes = Vec::new();
    for (tag, workers) in [("a", "1"), ("b", "2"), ("c", "2")] {
        let out_dir = dir.path().join(tag);
        write(
            &cfg,
            &format!(
                "job = \"simulate\"\nout_dir = \"{}\"\n\n[state]\nkind = \"modified_thermal\"\nt = 0.6\neps = 0.05\ndelta = 1.4\nmu = 1e-4\n\n[grid]\nnq = 64\nnp = 64\np_max = 3.0\n\n[time]\ndt = 0.05\nt_end = 2.0\ndiag_stride = 10\n",
                out_dir.display()
            ),
        );
        let out = run_hmf(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        bytes.push(std::fs::read(out_dir.join("timeseries.csv")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1], "1 vs 2 workers differ");
    assert_eq!(bytes[1], bytes[2], "repeated run differs");
}

#[test]
fn sweep_binary_writes_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    write(
        &cfg,
        &format!(
            "job = \"sweep\"\nout_dir = \"{}\"\n\n[grid]\nnq = 64\nnp = 64\np_max = 3.0\n\n[time]\ndt = 0.05\nt_end = 2.0\ndiag_stride = 10\n\n[sweep]\nkind = \"homogeneous_phase_diagram\"\nt = 0.6\nmu = 1e-4\neps = [0.05]\ndelta = [1.2, 1.7]\n",
            dir.path().display()
        ),
    );
    let out = run_hmf(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "eps,delta,M_f,verdict,I_theory");
    assert_eq!(lines.count(), 2);
}

#[test]
fn robustness_sweep_binary_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rob.toml");
    write(
        &cfg,
        &format!(
            "job = \"sweep\"\nout_dir = \"{}\"\n\n[grid]\nnq = 64\nnp = 64\np_max = 3.0\n\n[time]\ndt = 0.05\nt_end = 2.0\ndiag_stride = 10\n\n[sweep]\nkind = \"inhomogeneous_robustness\"\nt = 0.4\nmu = 1e-4\neps = [0.05]\ndelta = [0.5]\n",
            dir.path().display()
        ),
    );
    let out = run_hmf(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(text.starts_with("eps,delta,M_f,verdict,I_theory"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn resolution_override_applies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.toml");
    write(
        &cfg,
        &format!(
            "job = \"simulate\"\nout_dir = \"{}\"\n\n[state]\nkind = \"thermal_homogeneous\"\nt = 0.6\n\n[grid]\nnq = 512\nnp = 512\np_max = 3.0\n\n[time]\ndt = 0.05\nt_end = 0.0\n",
            dir.path().display()
        ),
    );
    let out = run_hmf(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--resolution",
        "32x48",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("grid 32x48"), "stdout: {stdout}");
}

#[test]
fn stability_at_the_threshold_is_marginal_scale() {
    // The shipped boundary config sits at delta = 1.536, where |I| < 1e-3.
    let dir = tempfile::tempdir().unwrap();
    let out = run_hmf(&[
        "stability",
        "--config",
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../configs/stability_modified.toml"
        ),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("stability.csv")).unwrap();
    let i: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(i.abs() < 1e-3, "I = {i}");
}

#[test]
fn check_battery_reports_expected_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("check.toml");
    write(&cfg, "job = \"check\"\n\n[check]\nua_b = 2.5\n");
    let out = run_hmf(&[
        "check",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("expected-divergent"), "stdout: {stdout}");
    assert!(!stdout.contains("FAIL"), "stdout: {stdout}");
    assert!(dir.path().join("deltaI.csv").exists());
}

#[test]
fn example_config_roundtrips_through_binary() {
    let out = run_hmf(&["example-config", "simulate"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("job = \"simulate\""));
}
