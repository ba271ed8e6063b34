//! Electrode basis potentials, the rf pseudopotential and secular modes.

mod grid;
pub mod io;
mod model;
pub mod synth;

pub use grid::{Derivatives, FieldSample, ScalarField, SpatialGrid, Vec3, DEFAULT_SPACING};
pub use io::{load_field, load_model, save_field, save_model};
pub use model::{Electrode, ModeSolution, RfDrive, TrapModel, DEGENERACY_TOL};
pub use synth::{
    synth_harmonic_trap, synth_junction_trap, synth_linear_trap, JunctionParams,
    LinearTrapParams,
};
