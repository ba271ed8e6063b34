//! Excitation from the DAC staircase as a function of update rate.

use rayon::prelude::*;

use super::ions::IonState;
use super::sim::{simulate_transport, SimConfig};
use crate::constants::TWO_PI;
use crate::error::{Error, Result};
use crate::filter::{filter_waveform, FilterSpec};
use crate::potential::TrapModel;
use crate::waveform::{time_waveform, TimingProfile, Waveform};

#[derive(Debug, Clone, PartialEq)]
pub struct DacScanConfig {
    pub sim: SimConfig,
    /// Filter between the DACs and the electrodes; `None` for the bare staircase.
    pub filter: Option<FilterSpec>,
    /// Sub-samples per DAC sample seen by the filter. The integrator
    /// interpolates the filtered output linearly between sub-samples, so this
    /// should resolve the secular period several times over.
    pub oversample: usize,
}

impl Default for DacScanConfig {
    fn default() -> Self {
        DacScanConfig {
            sim: SimConfig::default(),
            filter: Some(FilterSpec::rc_pair()),
            oversample: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    /// DAC update rate, Hz.
    pub rate: f64,
    /// Final axial excitation, quanta.
    pub nbar: f64,
}

/// Rate at which the J-th harmonic of the update rate hits `omega_z`.
pub fn resonant_rate(omega_z: f64, j: u32) -> f64 {
    omega_z / (TWO_PI * j as f64)
}

/// Expected full width at half maximum of the J-th resonance for a transport
/// of `steps` DAC updates: the energy follows |sum_k exp(i k x)|^2, whose
/// full width at half power in `x = omega_z / R` is 5.566 / K.
pub fn expected_width(omega_z: f64, j: u32, steps: usize) -> f64 {
    let r = resonant_rate(omega_z, j);
    5.566_229 * r * r / (steps as f64 * omega_z)
}

/// Run `w` once per rate with one DAC update per row and report the final
/// axial excitation. Points are simulated in parallel and returned in order.
pub fn dac_resonance_scan(
    model: &TrapModel,
    w: &Waveform,
    rates: &[f64],
    cfg: &DacScanConfig,
) -> Result<Vec<ScanPoint>> {
    let initial = IonState::single_at_minimum(model, &w.steps[0], &w.positions[0])?;
    rates
        .par_iter()
        .map(|&rate| {
            if !(rate > 0.0) {
                return Err(Error::invalid("DAC rate must be positive"));
            }
            let profile = TimingProfile::constant(w.len() as f64 / rate);
            let mut tw = time_waveform(w, &profile, rate)?;
            let mut sim = cfg.sim;
            if let Some(f) = &cfg.filter {
                tw = filter_waveform(f, &tw, cfg.oversample)?;
                sim.noise.dac_staircase = false;
            }
            let res = simulate_transport(model, &tw, &initial, &sim)?;
            Ok(ScanPoint {
                rate,
                nbar: res.axial().nbar,
            })
        })
        .collect()
}

/// Peak of one resonance found by a local scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Resonance {
    pub j: u32,
    pub predicted: f64,
    pub peak_rate: f64,
    pub peak_nbar: f64,
    /// Full width at half maximum, Hz; `None` if the scan did not bracket it.
    pub fwhm: Option<f64>,
    pub points: Vec<ScanPoint>,
}

impl Resonance {
    /// Peak within half a linewidth of the prediction.
    pub fn on_prediction(&self) -> bool {
        self.fwhm
            .is_some_and(|w| (self.peak_rate - self.predicted).abs() <= 0.5 * w)
    }
}

/// Scan `points` rates across `+- span` widths of the expected resonance and
/// locate its peak and half-maximum width.
pub fn locate_resonance(
    model: &TrapModel,
    w: &Waveform,
    omega_z: f64,
    j: u32,
    span: f64,
    points: usize,
    cfg: &DacScanConfig,
) -> Result<Resonance> {
    if points < 5 {
        return Err(Error::invalid("need at least 5 scan points"));
    }
    let centre = resonant_rate(omega_z, j);
    let half = span * expected_width(omega_z, j, w.len());
    let rates: Vec<f64> = (0..points)
        .map(|i| centre - half + 2.0 * half * i as f64 / (points - 1) as f64)
        .collect();
    let scan = dac_resonance_scan(model, w, &rates, cfg)?;
    Ok(analyse(j, centre, scan))
}

fn analyse(j: u32, predicted: f64, scan: Vec<ScanPoint>) -> Resonance {
    let k = (0..scan.len())
        .max_by(|&a, &b| scan[a].nbar.total_cmp(&scan[b].nbar))
        .unwrap_or(0);
    // Parabola through the top three points.
    let (mut peak_rate, mut peak_nbar) = (scan[k].rate, scan[k].nbar);
    if k > 0 && k + 1 < scan.len() {
        let (y0, y1, y2) = (scan[k - 1].nbar, scan[k].nbar, scan[k + 1].nbar);
        let denom = y0 - 2.0 * y1 + y2;
        if denom < 0.0 {
            let d = 0.5 * (y0 - y2) / denom;
            let step = scan[k + 1].rate - scan[k].rate;
            peak_rate = scan[k].rate + d * step;
            peak_nbar = y1 - 0.25 * (y0 - y2) * d;
        }
    }
    let half = 0.5 * peak_nbar;
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = k;
        for i in range {
            if scan[i].nbar < half {
                let (a, b) = (&scan[i], &scan[prev]);
                let f = (half - a.nbar) / (b.nbar - a.nbar);
                return Some(a.rate + f * (b.rate - a.rate));
            }
            prev = i;
        }
        None
    };
    let lo = cross(&mut (0..k).rev());
    let hi = cross(&mut (k + 1..scan.len()));
    Resonance {
        j,
        predicted,
        peak_rate,
        peak_nbar,
        fwhm: lo.zip(hi).map(|(l, h)| h - l),
        points: scan,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_resonances_at_3_6_mhz() {
        let w = TWO_PI * 3.6e6;
        let want = [450e3, 400e3, 360e3, 327.27e3, 300e3, 276.92e3, 257.14e3];
        for (j, r) in (8..=14).zip(want) {
            assert!((resonant_rate(w, j) - r).abs() < 10.0, "J = {j}");
        }
    }

    #[test]
    fn width_halves_with_twice_the_steps() {
        let w = TWO_PI * 3.6e6;
        let ratio = expected_width(w, 10, 40) / expected_width(w, 10, 80);
        assert!((ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn analyse_synthetic_peak() {
        let scan: Vec<ScanPoint> = (0..41)
            .map(|i| {
                let rate = 99.0 + 0.05 * i as f64;
                ScanPoint {
                    rate,
                    nbar: 1.0 / (1.0 + ((rate - 100.1) / 0.25).powi(2)),
                }
            })
            .collect();
        let r = analyse(1, 100.0, scan);
        assert!((r.peak_rate - 100.1).abs() < 0.01);
        assert!((r.fwhm.unwrap() - 0.5).abs() < 0.02);
        assert!(r.on_prediction());
    }
}
