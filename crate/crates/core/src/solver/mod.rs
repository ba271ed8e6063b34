//! Constraint assembly and bounded least-squares voltage solving.

pub mod bvls;
mod constraints;

pub use bvls::Bound;
pub use constraints::{
    assemble, assemble_from_samples, frame_from_axis, nullspace, solve, ConstraintSpec,
    ConstraintSystem, Row, SolverOptions, VoltageSolution,
};
