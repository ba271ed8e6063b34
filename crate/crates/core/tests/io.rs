mod common;

use ion_transport::constants::angular;
use ion_transport::potential::{load_field, load_model, save_field, save_model, Vec3};
use ion_transport::solver::SolverOptions;
use ion_transport::waveform::io::{read_timed, read_waveform, write_timed, write_waveform};
use ion_transport::waveform::{
    build_waveform, quantize, time_rows, ConstraintTemplate, FrequencySchedule, Trajectory,
};

#[test]
fn field_files_round_trip_bitwise() {
    let model = common::linear_trap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.field");
    let field = &model.electrodes()[3].field;
    save_field(field, &path).unwrap();
    let back = load_field(&path).unwrap();
    assert_eq!(back.grid, field.grid);
    assert!(back.values.iter().zip(&field.values).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn saved_model_evaluates_identically() {
    let model = common::linear_trap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = save_model(&model, dir.path().join("trap")).unwrap();
    let back = load_model(&manifest).unwrap();
    assert_eq!(back.n_electrodes(), model.n_electrodes());
    assert_eq!(back.drive(), model.drive());
    assert_eq!(back.species(), model.species());
    let v: Vec<f64> = (0..model.n_electrodes()).map(|i| 0.3 * i as f64 - 1.0).collect();
    for z in [-120e-6, -3e-6, 0.0, 47.5e-6] {
        let r = Vec3::new(0.4e-6, -0.2e-6, z);
        let a = model.total_potential(&v, &r).unwrap();
        let b = back.total_potential(&v, &r).unwrap();
        assert_eq!(a, b);
        assert_eq!(model.pseudopotential(&r).unwrap(), back.pseudopotential(&r).unwrap());
    }
}

#[test]
fn missing_manifest_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = save_model(&common::linear_trap(), dir.path()).unwrap();
    let text = std::fs::read_to_string(&manifest).unwrap();
    let cut: String = text.lines().filter(|l| !l.starts_with("mass")).map(|l| format!("{l}\n")).collect();
    std::fs::write(&manifest, cut).unwrap();
    let err = load_model(&manifest).unwrap_err();
    assert!(err.to_string().contains("mass"), "{err}");
}

#[test]
fn waveforms_round_trip_bitwise() {
    let model = common::linear_trap();
    let path = Trajectory::line(Vec3::new(0.0, 0.0, -20e-6), Vec3::new(0.0, 0.0, 20e-6), 5e-6).unwrap();
    let w = build_waveform(
        &model,
        &path,
        &FrequencySchedule::constant(angular(2e6)),
        &ConstraintTemplate::default(),
        &SolverOptions::default(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("w.csv");
    write_waveform(&w, &file).unwrap();
    let back = read_waveform(&file).unwrap();
    assert_eq!(back.steps, w.steps);
    assert_eq!(back.positions, w.positions);

    let tw = quantize(&time_rows(&w, 480e3).unwrap(), 16, 10.0);
    let file = dir.path().join("t.csv");
    write_timed(&tw, &file).unwrap();
    let back = read_timed(&file).unwrap();
    assert_eq!(back.rate.to_bits(), tw.rate.to_bits());
    assert_eq!(back.samples, tw.samples);
}

#[test]
fn malformed_waveform_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.csv");
    std::fs::write(&file, "position_x,position_y,position_z,V_1\n0,0,0,1\n0,0,1e-6,abc\n").unwrap();
    let err = read_waveform(&file).unwrap_err().to_string();
    assert!(err.contains("abc") && err.contains('3'), "{err}");
}
