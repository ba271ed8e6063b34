//! Closed-form heating from rf amplitude noise on the slope of the junction
//! barrier, checked against a short Monte Carlo run.

use ion_transport::constants::{angular, TWO_PI};
use ion_transport::dynamics::{simulate_static, IonState, NoiseModel, SimConfig};
use ion_transport::heating::{anomalous_rate, rf_noise_report};
use ion_transport::potential::synth::axis_grid;
use ion_transport::potential::{synth_junction_trap, JunctionParams, Vec3};
use ion_transport::solver::{assemble, solve, ConstraintSpec, SolverOptions};

fn main() -> ion_transport::Result<()> {
    let model = synth_junction_trap(&JunctionParams::default(), &axis_grid(-460e-6, 60e-6, 5e-6)?)?;
    let r = Vec3::new(0.0, 0.0, -156e-6);
    let omega = angular(3.6e6);
    let s_v = 1e-14;
    let report = rf_noise_report(&model, &r, 0.5 * s_v, 0.5 * s_v, omega)?;
    println!("rf noise {:.3e} quanta/s for S = {s_v:e} V^2/Hz", report.rate);
    println!("anomalous {:.2} quanta/s for S_E = 1e-13 (V/m)^2/Hz", anomalous_rate(1e-13, omega, model.species())?);

    let sol = solve(
        &assemble(&ConstraintSpec::along_axis(r, &Vec3::z(), omega), &model)?,
        &SolverOptions { alpha: 1.0, ..SolverOptions::default() },
        None,
    )?;
    let start = IonState::single_at_minimum(&model, &sol.v, &r)?;
    let hold = 20e-6;
    let runs = 20;
    let mut total = 0.0;
    for seed in 0..runs {
        let cfg = SimConfig {
            noise: NoiseModel { s_v_plus: 0.5 * s_v, s_v_minus: 0.5 * s_v, ..NoiseModel::default() },
            seed,
            settle_periods: 0.0,
            ..SimConfig::default()
        };
        let res = simulate_static(&model, &sol.v, &start, hold, &cfg)?;
        total += res.axial().nbar - res.axial().initial_nbar;
    }
    println!(
        "Monte Carlo {:.3e} quanta/s over {runs} runs at {:.2} MHz (closed form {:.3e})",
        total / runs as f64 / hold,
        omega / TWO_PI / 1e6,
        report.rate
    );
    Ok(())
}
