//! Shuttle through the junction and back: 16-bit DAC, Butterworth filter,
//! full ion dynamics.

use ion_transport::constants::angular;
use ion_transport::dynamics::{simulate_transport, IonState, NoiseModel, SimConfig};
use ion_transport::filter::{filter_waveform, FilterSpec};
use ion_transport::potential::synth::axis_grid;
use ion_transport::potential::{synth_junction_trap, JunctionParams, Vec3};
use ion_transport::solver::SolverOptions;
use ion_transport::waveform::{
    build_waveform, quantize, time_rows, ConstraintTemplate, FrequencySchedule, TimingProfile, Trajectory,
};

fn main() -> ion_transport::Result<()> {
    let model = synth_junction_trap(&JunctionParams::default(), &axis_grid(-460e-6, 60e-6, 5e-6)?)?;
    // Arc length from the start of the path, not z.
    let schedule = FrequencySchedule::piecewise(vec![
        (0.0, angular(3.6e6)),
        (200e-6, angular(3.6e6)),
        (300e-6, angular(2.5e6)),
        (400e-6, angular(7e6)),
    ])?;
    let rate = 480e3;
    let path = Trajectory::line(Vec3::new(0.0, 0.0, -400e-6), Vec3::zeros(), 5e-6)?
        .retimed(&TimingProfile::sinusoidal(300e-6), rate)?;
    let opts = SolverOptions { alpha: 1.0, ..SolverOptions::default() };
    let w = build_waveform(&model, &path, &schedule, &ConstraintTemplate::default(), &opts)?;

    let trip = time_rows(&w, rate)?.hold(10).concat(&time_rows(&w.reversed(), rate)?.hold(10))?;
    let dac = quantize(&trip, 16, 10.0);
    let filtered = filter_waveform(&FilterSpec::butterworth_replacement(), &dac, 64)?;
    let cfg = SimConfig {
        noise: NoiseModel { dac_staircase: false, ..NoiseModel::default() },
        ..SimConfig::default()
    };
    let start = IonState::single_at_minimum(&model, &w.steps[0], &w.positions[0])?;
    let res = simulate_transport(&model, &filtered, &start, &cfg)?;
    for m in &res.modes {
        println!("{:>3} n = {:.4} (start {:.4})", m.label, m.nbar, m.initial_nbar);
    }
    println!("max lag {:.2} um, {} steps of {:.2} ns", res.max_displacement * 1e6, res.steps, res.dt * 1e9);
    Ok(())
}
