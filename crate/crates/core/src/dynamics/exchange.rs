//! Energy exchange between two near-degenerate modes whose axes are rotated
//! suddenly, held while they dephase, and rotated back.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeConfig {
    /// Splitting omega'_x - omega'_z of the rotated modes, rad/s.
    pub delta_omega: f64,
    /// Time spent in the rotated frame, s.
    pub wait: f64,
    /// Rotation angle of the mode axes, rad.
    pub theta: f64,
    /// Initial energies, quanta.
    pub n_x: f64,
    pub n_z: f64,
    /// Relative phase already acquired before the wait (not predicted), rad.
    pub phase_offset: f64,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        ExchangeConfig {
            delta_omega: 0.0,
            wait: 0.0,
            theta: FRAC_PI_4,
            n_x: 0.0,
            n_z: 0.0,
            phase_offset: 0.0,
        }
    }
}

impl ExchangeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.wait >= 0.0) {
            return Err(Error::invalid("wait must be non-negative"));
        }
        if !(self.n_x >= 0.0 && self.n_z >= 0.0) {
            return Err(Error::invalid("mode energies must be non-negative"));
        }
        if !(self.delta_omega.is_finite() && self.theta.is_finite() && self.phase_offset.is_finite()) {
            return Err(Error::invalid("non-finite exchange parameter"));
        }
        Ok(())
    }

    pub fn phase(&self) -> f64 {
        self.delta_omega * self.wait + self.phase_offset
    }

    /// Fraction of each mode's energy moved to the other.
    pub fn transfer(&self) -> f64 {
        (2.0 * self.theta).sin().powi(2) * (0.5 * self.phase()).sin().powi(2)
    }
}

/// Mode energies (quanta) after the rotate, wait, rotate-back sequence.
/// Phases of the two initial motions are treated as uncorrelated.
pub fn mode_exchange(cfg: &ExchangeConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let p = cfg.transfer();
    Ok((cfg.n_x * (1.0 - p) + cfg.n_z * p, cfg.n_z * (1.0 - p) + cfg.n_x * p))
}

/// `n_z` after the sequence, for each wait time.
pub fn exchange_curve(cfg: &ExchangeConfig, waits: &[f64]) -> Result<Vec<(f64, f64)>> {
    waits
        .iter()
        .map(|&t| {
            let c = ExchangeConfig { wait: t, ..*cfg };
            mode_exchange(&c).map(|(_, nz)| (t, nz))
        })
        .collect()
}

/// Linear map from shim scale `A` to the splitting, `offset + slope * A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShimMap {
    pub offset: f64,
    pub slope: f64,
}

impl ShimMap {
    pub fn delta_omega(&self, a: f64) -> f64 {
        self.offset + self.slope * a
    }
}

/// One round of the exchange-and-recool protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolRound {
    /// Largest n_z over the wait scan.
    pub max_nz: f64,
    /// max(n_z) - min(n_z) over the wait scan.
    pub contrast: f64,
    /// Transverse energy entering the round, quanta.
    pub n_x: f64,
}

/// Repeat the exchange `rounds` times. Each round starts with n_z = 0
/// (re-cooled), scans the wait, then transfers the fraction `swap` of the
/// transverse energy at the chosen wait.
pub fn exchange_cooling_protocol(cfg: &ExchangeConfig, rounds: usize, swap: f64) -> Result<Vec<ProtocolRound>> {
    cfg.validate()?;
    if rounds == 0 {
        return Err(Error::invalid("need at least one round"));
    }
    if !(0.0..=1.0).contains(&swap) {
        return Err(Error::invalid("swap fraction must be in [0, 1]"));
    }
    let c = (2.0 * cfg.theta).sin().powi(2);
    let mut n_x = cfg.n_x;
    let mut out = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        out.push(ProtocolRound {
            max_nz: c * n_x,
            contrast: c * n_x,
            n_x,
        });
        n_x *= 1.0 - swap;
    }
    Ok(out)
}

/// Swap fraction implied by the contrast of two successive rounds.
pub fn swap_fraction(first: f64, second: f64) -> f64 {
    1.0 - second / first
}

/// Integrated cross-check: a 2D oscillator at mean frequency `omega_mean`
/// whose principal axes turn from 0 to `theta` over `rotation_time`, dwell
/// for `wait`, and turn back. The x mode starts with all the energy of
/// `cfg.n_x` (relative units) and z at rest; returns final `(n_x, n_z)`.
pub fn integrate_exchange(cfg: &ExchangeConfig, omega_mean: f64, rotation_time: f64) -> Result<(f64, f64)> {
    cfg.validate()?;
    if !(omega_mean > cfg.delta_omega.abs()) || !(rotation_time >= 0.0) {
        return Err(Error::invalid("need omega_mean > |delta_omega| and rotation_time >= 0"));
    }
    let wx = omega_mean + 0.5 * cfg.delta_omega;
    let wz = omega_mean - 0.5 * cfg.delta_omega;
    let total = 2.0 * rotation_time + cfg.wait;
    let angle = |t: f64| -> f64 {
        if rotation_time == 0.0 {
            return if t >= 0.0 && t < cfg.wait { cfg.theta } else { 0.0 };
        }
        if t < rotation_time {
            cfg.theta * t / rotation_time
        } else if t < rotation_time + cfg.wait {
            cfg.theta
        } else {
            cfg.theta * ((total - t) / rotation_time).max(0.0)
        }
    };
    // Acceleration -K(t) r with K = R diag(wx^2, wz^2) R^T.
    let accel = |t: f64, r: [f64; 2]| -> [f64; 2] {
        let (s, c) = angle(t).sin_cos();
        let (a, b) = (wx * wx, wz * wz);
        let kxx = a * c * c + b * s * s;
        let kzz = a * s * s + b * c * c;
        let kxz = (a - b) * s * c;
        [-(kxx * r[0] + kxz * r[1]), -(kxz * r[0] + kzz * r[1])]
    };
    // Unit mass; energy n_x in the x mode, starting at a turning point.
    let amp = (2.0 * cfg.n_x).sqrt() / wx;
    let mut r = [amp, 0.0];
    let mut v = [0.0, 0.0];
    let dt_max = 2.0 * std::f64::consts::PI / (200.0 * wx);
    let n = ((total / dt_max).ceil() as usize).max(1);
    let h = total / n as f64;
    let mut a = accel(0.0, r);
    for k in 0..n {
        let t = k as f64 * h;
        for i in 0..2 {
            v[i] += 0.5 * h * a[i];
            r[i] += h * v[i];
        }
        a = accel(t + h, r);
        for i in 0..2 {
            v[i] += 0.5 * h * a[i];
        }
    }
    let ex = 0.5 * (v[0] * v[0] + wx * wx * r[0] * r[0]);
    let ez = 0.5 * (v[1] * v[1] + wz * wz * r[1] * r[1]);
    Ok((ex, ez))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg(phi: f64, theta: f64) -> ExchangeConfig {
        ExchangeConfig {
            delta_omega: 1.0,
            wait: phi,
            theta,
            n_x: 3.0,
            n_z: 0.5,
            phase_offset: 0.0,
        }
    }

    #[test]
    fn full_periods_return_energies() {
        for m in 1..4 {
            let (x, z) = mode_exchange(&cfg(2.0 * PI * m as f64, FRAC_PI_4)).unwrap();
            assert!((x - 3.0).abs() < 1e-12 && (z - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_half_periods_swap() {
        for m in 1..4 {
            let (x, z) = mode_exchange(&cfg(PI * (2 * m - 1) as f64, FRAC_PI_4)).unwrap();
            assert!((x - 0.5).abs() < 1e-12 && (z - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn no_rotation_no_mixing() {
        for phi in [0.3, 1.0, 2.5] {
            assert_eq!(mode_exchange(&cfg(phi, 0.0)).unwrap(), (3.0, 0.5));
        }
    }

    #[test]
    fn protocol_limits() {
        let c = ExchangeConfig {
            n_x: 0.68,
            ..ExchangeConfig::default()
        };
        let full = exchange_cooling_protocol(&c, 2, 1.0).unwrap();
        assert_eq!(full[1].contrast, 0.0);
        let none = exchange_cooling_protocol(&c, 3, 0.0).unwrap();
        assert!(none.iter().all(|r| r.contrast == none[0].contrast));
    }

    #[test]
    fn sudden_integration_matches_projection() {
        let c = ExchangeConfig {
            delta_omega: 2.0 * PI * 20e3,
            wait: 0.0,
            theta: FRAC_PI_4,
            n_x: 1.0,
            n_z: 0.0,
            phase_offset: 0.0,
        };
        for frac in [0.25, 0.5, 0.75] {
            let c = ExchangeConfig {
                wait: frac * 2.0 * PI / c.delta_omega,
                ..c
            };
            let (_, ez) = integrate_exchange(&c, 2.0 * PI * 2e6, 0.0).unwrap();
            let (_, nz) = mode_exchange(&c).unwrap();
            assert!((ez - nz).abs() < 0.02, "{frac}: {ez} vs {nz}");
        }
    }
}
