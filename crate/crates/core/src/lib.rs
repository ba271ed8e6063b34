//! Transport waveforms for ions in segmented Paul traps.
//!
//! The crate builds electrode voltage sequences that move a trapping well along
//! a path, renders them through DAC and filter models, integrates the ion's
//! classical motion in the resulting time-dependent potential, and estimates
//! motional heating from rf and electric-field noise.

pub mod cli;
pub mod config;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod filter;
pub mod heating;
pub mod potential;
pub mod solver;
pub mod waveform;

pub use error::{Error, Result};
