//! Waveforms: per-step voltage solutions along a path, their DAC timing and
//! quantization.

mod builder;
pub mod io;
mod timing;

pub use builder::{
    build_waveform, ConstraintTemplate, FrequencySchedule, StepFlags, Trajectory, Waveform,
    DEFAULT_STEP, POSITION_PRIORITY,
};
pub use timing::{
    dac_lsb, quantize, time_rows, time_waveform, Dwell, TimedWaveform, TimingProfile, VelocityProfile,
    DEFAULT_DAC_RATE,
};
