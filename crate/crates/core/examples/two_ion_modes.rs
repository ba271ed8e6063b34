//! Normal modes of a two-ion crystal in a 2 MHz well.

use ion_transport::constants::{angular, TWO_PI};
use ion_transport::dynamics::{two_ion_modes, Crystal};
use ion_transport::potential::synth::axis_grid;
use ion_transport::potential::{synth_linear_trap, LinearTrapParams, Vec3};
use ion_transport::solver::{assemble, solve, ConstraintSpec, SolverOptions};

fn main() -> ion_transport::Result<()> {
    let model = synth_linear_trap(&LinearTrapParams::default(), &axis_grid(-200e-6, 200e-6, 5e-6)?)?;
    let omega = angular(2e6);
    let spec = ConstraintSpec::along_axis(Vec3::zeros(), &Vec3::z(), omega);
    let v = solve(&assemble(&spec, &model)?, &SolverOptions::default(), None)?.v;
    let guess = [Vec3::new(0.0, 0.0, -3e-6), Vec3::new(0.0, 0.0, 3e-6)];
    let crystal = Crystal::new(&model, &v, &guess)?;
    let sep = (crystal.equilibrium[1] - crystal.equilibrium[0]).norm();
    println!("separation {:.3} um", sep * 1e6);
    for m in &crystal.modes {
        println!("{:>6} {:10.4} MHz", m.label, m.omega() / TWO_PI / 1e6);
    }
    let (com, stretch) = two_ion_modes(omega)?;
    println!("ideal axial pair {:.4} / {:.4} MHz", com / TWO_PI / 1e6, stretch / TWO_PI / 1e6);
    Ok(())
}
