//! Scan the DAC update rate around the J = 10 resonance of a 3.6 MHz well
//! and compare the peak with the predicted rate and width.

use ion_transport::constants::angular;
use ion_transport::dynamics::dac::expected_width;
use ion_transport::dynamics::{locate_resonance, DacScanConfig};
use ion_transport::potential::synth::axis_grid;
use ion_transport::potential::{synth_linear_trap, LinearTrapParams, Vec3};
use ion_transport::solver::SolverOptions;
use ion_transport::waveform::{build_waveform, ConstraintTemplate, FrequencySchedule, Trajectory};

fn main() -> ion_transport::Result<()> {
    let model = synth_linear_trap(&LinearTrapParams::default(), &axis_grid(-200e-6, 200e-6, 5e-6)?)?;
    let omega = angular(3.6e6);
    let path = Trajectory::line(Vec3::new(0.0, 0.0, -50e-6), Vec3::new(0.0, 0.0, 50e-6), 100e-6 / 49.0)?;
    let w = build_waveform(
        &model,
        &path,
        &FrequencySchedule::constant(omega),
        &ConstraintTemplate::default(),
        &SolverOptions::default(),
    )?;
    // The RC pair sits between the DACs and the electrodes.
    let cfg = DacScanConfig::default();
    let res = locate_resonance(&model, &w, omega, 10, 1.5, 17, &cfg)?;
    for p in &res.points {
        println!("{:10.3} kHz  {:10.4}", p.rate / 1e3, p.nbar);
    }
    println!(
        "peak {:.3} kHz (predicted {:.3}), width {:.0} Hz (expected {:.0})",
        res.peak_rate / 1e3,
        res.predicted / 1e3,
        res.fwhm.unwrap_or(f64::NAN),
        expected_width(omega, 10, w.len())
    );
    Ok(())
}
