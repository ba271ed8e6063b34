//! Closed-form motional heating rates and pseudopotential barrier profiles.

use crate::constants::{Species, HBAR};
use crate::error::{Error, Result};
use crate::potential::{TrapModel, Vec3};
use crate::waveform::TimedWaveform;

/// Inputs of the rf sideband-noise heating rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfNoiseInput {
    /// Voltage noise density at `Omega_rf + omega_z`, V^2/Hz.
    pub s_plus: f64,
    /// Voltage noise density at `Omega_rf - omega_z`, V^2/Hz.
    pub s_minus: f64,
    pub v_rf: f64,
    pub omega_z: f64,
    pub omega_rf: f64,
    pub species: Species,
    /// d(E_0^2)/dz at the ion, V^2/m^3.
    pub dz_e0sq: f64,
}

impl RfNoiseInput {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_plus >= 0.0 && self.s_minus >= 0.0) {
            return Err(Error::invalid("noise densities must be non-negative"));
        }
        if !(self.v_rf > 0.0 && self.omega_z > 0.0 && self.omega_rf > self.omega_z) {
            return Err(Error::invalid("need V_rf > 0 and 0 < omega_z < Omega_rf"));
        }
        if !self.dz_e0sq.is_finite() {
            return Err(Error::invalid("field-gradient term is not finite"));
        }
        Ok(())
    }
}

/// Heating of the axial mode (quanta/s) from rf voltage noise on a
/// pseudopotential slope:
/// `q^4 (dE_0^2/dz)^2 (S+ + S-) / (16 m^3 Omega^4 hbar omega_z V_rf^2)`.
pub fn rf_noise_rate(input: &RfNoiseInput) -> Result<f64> {
    input.validate()?;
    let Species { charge: q, mass: m } = input.species;
    let pre = q.powi(4) / (16.0 * m.powi(3) * input.omega_rf.powi(4) * HBAR * input.omega_z);
    let s = (input.s_plus + input.s_minus) / (input.v_rf * input.v_rf);
    Ok(pre * input.dz_e0sq * input.dz_e0sq * s)
}

/// A closed-form rate with the inputs that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingReport {
    /// Quanta/s, never negative.
    pub rate: f64,
    pub input: RfNoiseInput,
    pub position: Option<Vec3>,
}

/// Rf-noise rate of the axial mode at `r`, with the field slope taken from the model.
pub fn rf_noise_report(model: &TrapModel, r: &Vec3, s_plus: f64, s_minus: f64, omega_z: f64) -> Result<HeatingReport> {
    let drive = model.drive();
    let input = RfNoiseInput {
        s_plus,
        s_minus,
        v_rf: drive.amplitude,
        omega_z,
        omega_rf: drive.omega,
        species: model.species(),
        dz_e0sq: dz_e0sq_at(model, r)?,
    };
    Ok(HeatingReport {
        rate: rf_noise_rate(&input)?,
        input,
        position: Some(*r),
    })
}

/// Heating (quanta/s) from white electric-field noise of density `s_e`
/// ((V/m)^2/Hz): `q^2 S_E / (4 m hbar omega_z)`.
pub fn anomalous_rate(s_e: f64, omega_z: f64, species: Species) -> Result<f64> {
    if !(s_e >= 0.0) || !(omega_z > 0.0) {
        return Err(Error::invalid("need S_E >= 0 and omega_z > 0"));
    }
    let Species { charge: q, mass: m } = species;
    Ok(q * q * s_e / (4.0 * m * HBAR * omega_z))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierPoint {
    pub position: Vec3,
    /// Coordinate along the profile axis, m.
    pub s: f64,
    /// q * phi_ps, eV.
    pub pseudo_ev: f64,
    /// E_0^2, (V/m)^2.
    pub e0sq: f64,
    /// d(E_0^2)/ds, V^2/m^3.
    pub ds_e0sq: f64,
}

/// Pseudopotential and rf-field slope at `n` evenly spaced points from
/// `origin + s0 * axis` to `origin + s1 * axis`. The slope is taken by
/// centred differences of the sampled E_0^2 (second-order one-sided at the ends).
pub fn barrier_profile(
    model: &TrapModel,
    origin: &Vec3,
    axis: &Vec3,
    range: (f64, f64),
    n: usize,
) -> Result<Vec<BarrierPoint>> {
    if n < 3 {
        return Err(Error::invalid("profile needs at least 3 points"));
    }
    let dir = axis.normalize();
    let (s0, s1) = range;
    let ds = (s1 - s0) / (n - 1) as f64;
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let s = s0 + i as f64 * ds;
        let r = origin + dir * s;
        pts.push(BarrierPoint {
            position: r,
            s,
            // phi_ps in volts is q * phi_ps in eV.
            pseudo_ev: model.pseudopotential(&r)?,
            e0sq: model.rf_field_squared(&r)?,
            ds_e0sq: 0.0,
        });
    }
    let e: Vec<f64> = pts.iter().map(|p| p.e0sq).collect();
    for i in 0..n {
        pts[i].ds_e0sq = if i == 0 {
            (-3.0 * e[0] + 4.0 * e[1] - e[2]) / (2.0 * ds)
        } else if i == n - 1 {
            (3.0 * e[n - 1] - 4.0 * e[n - 2] + e[n - 3]) / (2.0 * ds)
        } else {
            (e[i + 1] - e[i - 1]) / (2.0 * ds)
        };
    }
    Ok(pts)
}

/// Rf-noise heating rate per unit voltage noise density on both sidebands
/// ((quanta/s) per (V^2/Hz)) along a barrier profile, times `scale`.
pub fn rate_profile(model: &TrapModel, profile: &[BarrierPoint], omega_z: f64, scale: f64) -> Result<Vec<(f64, f64)>> {
    let drive = model.drive();
    profile
        .iter()
        .map(|p| {
            let r = rf_noise_rate(&RfNoiseInput {
                s_plus: 0.5,
                s_minus: 0.5,
                v_rf: drive.amplitude,
                omega_z,
                omega_rf: drive.omega,
                species: model.species(),
                dz_e0sq: p.ds_e0sq,
            })?;
            Ok((p.s, scale * r))
        })
        .collect()
}

/// d(E_0^2)/dz at `r` by a centred difference over one grid spacing.
pub fn dz_e0sq_at(model: &TrapModel, r: &Vec3) -> Result<f64> {
    let h = model.grid().spacing.z;
    let dz = Vec3::new(0.0, 0.0, h);
    Ok((model.rf_field_squared(&(r + dz))? - model.rf_field_squared(&(r - dz))?) / (2.0 * h))
}

/// Quanta accumulated over a timed transport at the commanded positions:
/// the rf-noise rate at each sample's position plus a constant anomalous
/// rate, integrated over the sample periods.
pub fn transport_exposure(
    model: &TrapModel,
    tw: &TimedWaveform,
    s_plus: f64,
    s_minus: f64,
    omega_z: f64,
    anomalous: f64,
) -> Result<f64> {
    if tw.positions.len() != tw.len() {
        return Err(Error::invalid("timed waveform carries no commanded positions"));
    }
    let drive = model.drive();
    let mut total = 0.0;
    for p in &tw.positions {
        let rate = rf_noise_rate(&RfNoiseInput {
            s_plus,
            s_minus,
            v_rf: drive.amplitude,
            omega_z,
            omega_rf: drive.omega,
            species: model.species(),
            dz_e0sq: dz_e0sq_at(model, p)?,
        })?;
        total += (rate + anomalous) / tw.rate;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::angular;

    fn input() -> RfNoiseInput {
        RfNoiseInput {
            s_plus: 1e-15,
            s_minus: 2e-15,
            v_rf: 200.0,
            omega_z: angular(3.6e6),
            omega_rf: angular(83e6),
            species: Species::beryllium9(),
            dz_e0sq: 1e15,
        }
    }

    #[test]
    fn rf_rate_scalings() {
        let base = rf_noise_rate(&input()).unwrap();
        assert!(base > 0.0);
        let r = |f: &dyn Fn(&mut RfNoiseInput)| {
            let mut i = input();
            f(&mut i);
            rf_noise_rate(&i).unwrap() / base
        };
        assert!((r(&|i| i.dz_e0sq *= 3.0) - 9.0).abs() < 1e-12);
        assert!((r(&|i| i.omega_rf *= 2.0) - 1.0 / 16.0).abs() < 1e-12);
        assert!((r(&|i| i.omega_z *= 2.0) - 0.5).abs() < 1e-12);
        assert!((r(&|i| i.s_plus *= 4.0) - 2.0).abs() < 1e-12);
        assert_eq!(r(&|i| i.dz_e0sq = 0.0), 0.0);
        assert_eq!(r(&|i| {
            i.s_plus = 0.0;
            i.s_minus = 0.0
        }), 0.0);
    }

    #[test]
    fn anomalous_rate_scalings() {
        let be = Species::beryllium9();
        let w = angular(3.6e6);
        let base = anomalous_rate(1e-13, w, be).unwrap();
        assert!((anomalous_rate(1e-13, 2.0 * w, be).unwrap() / base - 0.5).abs() < 1e-12);
        let heavy = Species {
            mass: 2.0 * be.mass,
            ..be
        };
        assert!((anomalous_rate(1e-13, w, heavy).unwrap() / base - 0.5).abs() < 1e-12);
        assert_eq!(anomalous_rate(0.0, w, be).unwrap(), 0.0);
        assert!(anomalous_rate(-1.0, w, be).is_err());
    }
}
