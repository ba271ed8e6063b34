#![allow(dead_code)]

use std::io::Write;

use ion_transport::constants::{angular, Species};
use ion_transport::potential::synth::{axis_grid, quadrupole_k_for, HARMONIC_AXIAL_CURVATURE};
use ion_transport::potential::{
    synth_harmonic_trap, synth_junction_trap, synth_linear_trap, JunctionParams, LinearTrapParams, RfDrive,
    SpatialGrid, TrapModel, Vec3,
};

pub fn linear_trap() -> TrapModel {
    synth_linear_trap(&LinearTrapParams::default(), &axis_grid(-200e-6, 200e-6, 5e-6).unwrap()).unwrap()
}

pub fn junction_trap() -> TrapModel {
    synth_junction_trap(&JunctionParams::default(), &axis_grid(-460e-6, 60e-6, 5e-6).unwrap()).unwrap()
}

/// Exact quadratic well with a 10 MHz radial pseudopotential and the given
/// axial frequency; returns the model and its voltages.
pub fn harmonic_trap(f_axial: f64) -> (TrapModel, Vec<f64>) {
    let grid = SpatialGrid::covering(Vec3::new(-20e-6, -20e-6, -40e-6), Vec3::new(20e-6, 20e-6, 40e-6), 5e-6).unwrap();
    let drive = RfDrive {
        amplitude: 200.0,
        omega: angular(83e6),
    };
    let sp = Species::beryllium9();
    let k = quadrupole_k_for(angular(10e6), drive, sp);
    let model = synth_harmonic_trap(&grid, k, drive, sp).unwrap();
    let v = vec![0.0, 0.0, 0.0, sp.curvature_for(angular(f_axial)) / HARMONIC_AXIAL_CURVATURE];
    (model, v)
}

/// Print one result line straight to stderr so it shows without `--nocapture`.
pub fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("[acceptance {n:>2}] {verdict} {name}: {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}
