//! Solve a 100 um shuttle, play it at 480 kHz through a 16-bit DAC and
//! write both forms as CSV.

use ion_transport::constants::{angular, TWO_PI};
use ion_transport::potential::synth::axis_grid;
use ion_transport::potential::{synth_linear_trap, LinearTrapParams, Vec3};
use ion_transport::solver::SolverOptions;
use ion_transport::waveform::io::{write_timed, write_waveform};
use ion_transport::waveform::{
    build_waveform, quantize, time_rows, ConstraintTemplate, FrequencySchedule, TimingProfile, Trajectory,
};

fn main() -> ion_transport::Result<()> {
    let model = synth_linear_trap(&LinearTrapParams::default(), &axis_grid(-200e-6, 200e-6, 5e-6)?)?;
    let rate = 480e3;
    let path = Trajectory::line(Vec3::new(0.0, 0.0, -50e-6), Vec3::new(0.0, 0.0, 50e-6), 5e-6)?
        .retimed(&TimingProfile::sinusoidal(60e-6), rate)?;
    let w = build_waveform(
        &model,
        &path,
        &FrequencySchedule::constant(angular(2e6)),
        &ConstraintTemplate::default(),
        &SolverOptions::default(),
    )?;
    let worst = w
        .achieved_omega
        .iter()
        .zip(&w.target_omega)
        .map(|(a, t)| ((a - t) / t).abs())
        .fold(0.0, f64::max);
    println!("{} steps, worst frequency error {:.3}%", w.len(), 100.0 * worst);
    println!("first step {:.1} kHz", w.achieved_omega[0] / TWO_PI / 1e3);

    let dac = quantize(&time_rows(&w, rate)?, 16, 10.0);
    let dir = std::env::temp_dir();
    write_waveform(&w, dir.join("shuttle_waveform.csv"))?;
    write_timed(&dac, dir.join("shuttle_dac.csv"))?;
    println!("{} DAC samples over {:.1} us", dac.len(), dac.duration() * 1e6);
    Ok(())
}
