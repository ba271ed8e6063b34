//! Pseudopotential barrier on the junction approach and the rf-noise
//! heating rate per unit noise along it.

use ion_transport::constants::angular;
use ion_transport::heating::{barrier_profile, rate_profile};
use ion_transport::potential::synth::axis_grid;
use ion_transport::potential::{synth_junction_trap, JunctionParams, Vec3};

fn main() -> ion_transport::Result<()> {
    let model = synth_junction_trap(&JunctionParams::default(), &axis_grid(-460e-6, 60e-6, 5e-6)?)?;
    let prof = barrier_profile(&model, &Vec3::zeros(), &Vec3::z(), (-300e-6, 0.0), 31)?;
    let rates = rate_profile(&model, &prof, angular(3.6e6), 1.0)?;
    println!("{:>8} {:>12} {:>14}", "z_um", "pseudo_meV", "rate/(S/V^2)");
    for (p, (_, r)) in prof.iter().zip(&rates) {
        println!("{:8.1} {:12.4} {:14.4e}", p.s * 1e6, p.pseudo_ev * 1e3, r);
    }
    Ok(())
}
