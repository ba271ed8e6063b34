//! Solve for electrode voltages that put a 2 MHz well at one point.

use ion_transport::constants::{angular, TWO_PI};
use ion_transport::potential::synth::axis_grid;
use ion_transport::potential::{synth_linear_trap, LinearTrapParams, Vec3};
use ion_transport::solver::{assemble, solve, ConstraintSpec, SolverOptions};

fn main() -> ion_transport::Result<()> {
    let model = synth_linear_trap(&LinearTrapParams::default(), &axis_grid(-200e-6, 200e-6, 5e-6)?)?;
    let r0 = Vec3::new(0.0, 0.0, 30e-6);
    let spec = ConstraintSpec::along_axis(r0, &Vec3::z(), angular(2e6));
    let system = assemble(&spec, &model)?;
    let sol = solve(&system, &SolverOptions::default(), None)?;

    for (e, v) in model.electrodes().iter().zip(&sol.v) {
        println!("{:>6} {:+.4} V", e.name, v);
    }
    println!("residual {:.2e}, {} free directions", sol.residual, sol.nullspace_dim);

    let min = model.find_minimum(&sol.v, &r0)?;
    let modes = model.modes_at(&sol.v, &min)?;
    println!(
        "minimum at z = {:.3} um, axial {:.4} MHz",
        min.z * 1e6,
        modes.frequency_along(&Vec3::z()) / TWO_PI / 1e6
    );
    Ok(())
}
