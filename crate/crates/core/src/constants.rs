//! Physical constants (CODATA 2018 exact or recommended values) and ion species.

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Coulomb constant 1/(4 pi eps0), N m^2 / C^2.
pub const COULOMB_K: f64 = 8.987_551_792_3e9;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Charge and mass of a singly charged ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Species {
    pub charge: f64,
    pub mass: f64,
}

impl Species {
    /// 9Be+, mass 9.012 182 u.
    pub fn beryllium9() -> Self {
        Species {
            charge: ELEMENTARY_CHARGE,
            mass: 9.012_182 * AMU,
        }
    }

    /// Curvature (V/m^2) of an electric potential that gives secular frequency `omega`.
    pub fn curvature_for(&self, omega: f64) -> f64 {
        self.mass * omega * omega / self.charge
    }

    /// Energy of one motional quantum at `omega`, J.
    pub fn quantum(omega: f64) -> f64 {
        HBAR * omega
    }
}

/// Convert a frequency in Hz to angular frequency.
pub fn angular(f_hz: f64) -> f64 {
    TWO_PI * f_hz
}
