use std::path::{Path, PathBuf};

use ion_transport::cli::{run, EXIT_CONFIG, EXIT_ION_LOST, EXIT_NUMERICAL, EXIT_OK};

fn cli(sub: &str, out: &Path, sets: &[&str]) -> i32 {
    let mut args = vec![
        "ion-transport".to_string(),
        sub.to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    for s in sets {
        args.push("--set".into());
        args.push(s.to_string());
    }
    run(args)
}

/// Data rows of a table written by the CLI, parsed as numbers where possible.
fn rows(path: PathBuf) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# "), "{}", path.display());
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let body = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, body)
}

fn column(path: PathBuf, name: &str) -> Vec<f64> {
    let (h, body) = rows(path);
    let i = h.iter().position(|c| c == name).unwrap();
    body.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn bad_settings_exit_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli("build", dir.path(), &["solver.v_max=lots"]), EXIT_CONFIG);
    assert_eq!(cli("filter", dir.path(), &["filter.kind=chebyshev"]), EXIT_CONFIG);
    assert_eq!(cli("build", dir.path(), &["no_equals_sign"]), EXIT_CONFIG);
    let missing = dir.path().join("absent.cfg");
    let code = run(["ion-transport", "heat", "--config", missing.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn point_outside_the_grid_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli("build", dir.path(), &["path.from_um=500"]), EXIT_NUMERICAL);
}

#[test]
fn violent_noise_loses_the_ion() {
    let dir = tempfile::tempdir().unwrap();
    let code = cli(
        "simulate",
        dir.path(),
        &["freq_mhz=2", "timing.hold_samples=200", "noise.s_e=1", "sim.settle_periods=0"],
    );
    assert_eq!(code, EXIT_ION_LOST);
}

#[test]
fn single_point_build_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli("build", dir.path(), &["path.from_um=10", "freq_mhz=2"]), EXIT_OK);
    let w = ion_transport::waveform::io::read_waveform(dir.path().join("waveform.csv")).unwrap();
    assert_eq!(w.steps.len(), 1);
    assert!((w.positions[0].z - 10e-6).abs() < 1e-12);
    let achieved = column(dir.path().join("frequencies.csv"), "achieved_hz");
    assert_eq!(achieved.len(), 1);
    assert!((achieved[0] - 2e6).abs() < 0.02 * 2e6, "{}", achieved[0]);
}

#[test]
fn exchange_curve_repeats_every_full_turn() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli("exchange", dir.path(), &["exchange.points=201"]), EXIT_OK);
    let phase = column(dir.path().join("exchange.csv"), "phase_rad");
    let nz = column(dir.path().join("exchange.csv"), "nz");
    assert_eq!(nz.len(), 201);
    let turn = std::f64::consts::TAU;
    assert!((phase[200] - phase[0] - 2.0 * turn).abs() < 1e-9);
    for i in 0..=100 {
        assert!((nz[i] - nz[i + 100]).abs() < 1e-9, "{i}");
    }
    let spread = nz.iter().cloned().fold(f64::MIN, f64::max) - nz.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 0.1);
}

fn gentle_transport(out: &Path, seed: &str) -> i32 {
    let args = [
        "ion-transport",
        "simulate",
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
        "--set",
        "path.from_um=-20",
        "--set",
        "path.to_um=20",
        "--set",
        "path.step_um=1",
        "--set",
        "freq_mhz=2",
        "--set",
        "timing.retime=sinusoidal",
        "--set",
        "timing.duration_us=20",
        "--set",
        "timing.rate_khz=10000",
        "--set",
        "noise.s_e=1e-12",
        "--set",
        "dac.bits=0",
        "--set",
        "sim.record_every=200",
    ];
    run(args)
}

#[test]
fn slow_transport_stays_near_ground() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gentle_transport(dir.path(), "3"), EXIT_OK);
    let (h, body) = rows(dir.path().join("result.csv"));
    let i = h.iter().position(|c| c == "nbar").unwrap();
    let axial = body.iter().find(|r| r[0].contains('z')).unwrap_or(&body[0]);
    let nbar: f64 = axial[i].parse().unwrap();
    assert!(nbar < 0.1, "{nbar}");
    assert!(dir.path().join("trajectory_ion0.csv").exists());
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    assert_eq!(gentle_transport(a.path(), "11"), EXIT_OK);
    assert_eq!(gentle_transport(b.path(), "11"), EXIT_OK);
    assert_eq!(gentle_transport(c.path(), "12"), EXIT_OK);
    for f in ["result.csv", "trajectory_ion0.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
        assert_ne!(x, std::fs::read(c.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn every_table_carries_a_schema_line() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli("filter", dir.path(), &["filter.points=20"]), EXIT_OK);
    assert_eq!(cli("heat", dir.path(), &["heat.points=31", "noise.s_v=1e-12", "heat.at_um=-100"]), EXIT_OK);
    for f in ["response.csv", "barrier.csv", "heating.csv", "report.csv"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(text.lines().next().unwrap().ends_with("schema v1"), "{f}");
    }
    let mag = column(dir.path().join("response.csv"), "mag");
    assert_eq!(mag.len(), 20);
    assert!(mag.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}
