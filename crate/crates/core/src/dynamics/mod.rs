//! Classical ion motion in the time-dependent trap potential, the two-ion
//! crystal, the mode-exchange model and DAC update-rate scans.

pub mod dac;
pub mod exchange;
mod ions;
mod sim;

pub use dac::{dac_resonance_scan, locate_resonance, resonant_rate, DacScanConfig, Resonance, ScanPoint};
pub use exchange::{
    exchange_cooling_protocol, exchange_curve, integrate_exchange, mode_exchange, swap_fraction,
    ExchangeConfig, ProtocolRound, ShimMap,
};
pub use ions::{equilibrium, two_ion_modes, Crystal, IonState, NormalMode};
pub use sim::{
    simulate_static, simulate_transport, ExcitationResult, Integrator, ModeExcitation, NoiseModel,
    RfMode, Sideband, SimConfig, TrajectorySample, MIN_STEPS_PER_PERIOD, STEPS_PER_PERIOD,
};
