//! Build the default linear trap, save it, and print the pseudopotential
//! and electrode fields along the axis.

use ion_transport::potential::synth::axis_grid;
use ion_transport::potential::{save_model, synth_linear_trap, LinearTrapParams, Vec3};

fn main() -> ion_transport::Result<()> {
    let grid = axis_grid(-200e-6, 200e-6, 5e-6)?;
    let model = synth_linear_trap(&LinearTrapParams::default(), &grid)?;
    let dir = std::env::temp_dir().join("ion-transport-linear");
    let manifest = save_model(&model, &dir)?;
    println!("{} electrodes, manifest at {}", model.n_electrodes(), manifest.display());

    // Pseudopotential 2 um off axis, where the rf null no longer hides it.
    println!("{:>8} {:>12} {:>12} {:>12}", "z_um", "pseudo_meV", "E1_z V/m", "E2_z V/m");
    for i in -4..=4 {
        let r = Vec3::new(0.0, 0.0, 40e-6 * i as f64);
        let ps = model.pseudopotential(&(r + Vec3::new(2e-6, 0.0, 0.0)))?;
        let e1 = model.electrode_sample(0, &r)?.gradient.z;
        let e2 = model.electrode_sample(1, &r)?.gradient.z;
        println!("{:8.1} {:12.4} {:12.4} {:12.4}", r.z * 1e6, 1e3 * ps, -e1, -e2);
    }
    Ok(())
}
