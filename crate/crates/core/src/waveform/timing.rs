use std::f64::consts::PI;

use super::builder::Waveform;
use crate::error::{Error, Result};
use crate::potential::Vec3;

/// DAC update rate used for the reference transports, 480 kHz.
pub const DEFAULT_DAC_RATE: f64 = 480e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityProfile {
    /// Arc length proportional to time.
    Constant,
    /// `s(t) = S (1 - cos(pi t / T)) / 2`: starts and ends at rest.
    Sinusoidal,
}

/// Hold the row nearest `position` for `seconds` when the well first reaches it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dwell {
    pub position: Vec3,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingProfile {
    pub kind: VelocityProfile,
    /// Time spent moving, excluding dwells, s.
    pub duration: f64,
    pub dwells: Vec<Dwell>,
}

impl TimingProfile {
    pub fn constant(duration: f64) -> Self {
        TimingProfile {
            kind: VelocityProfile::Constant,
            duration,
            dwells: Vec::new(),
        }
    }

    pub fn sinusoidal(duration: f64) -> Self {
        TimingProfile {
            kind: VelocityProfile::Sinusoidal,
            duration,
            dwells: Vec::new(),
        }
    }

    /// Constant velocity `speed` (m/s) over a path of `length` m.
    pub fn constant_speed(speed: f64, length: f64) -> Self {
        TimingProfile::constant(length / speed)
    }

    pub fn with_dwell(mut self, position: Vec3, seconds: f64) -> Self {
        self.dwells.push(Dwell { position, seconds });
        self
    }

    /// Fraction of the path covered at normalized time `u` in [0, 1].
    pub fn progress(&self, u: f64) -> f64 {
        match self.kind {
            VelocityProfile::Constant => u,
            VelocityProfile::Sinusoidal => 0.5 * (1.0 - (PI * u).cos()),
        }
    }
}

/// Uniformly sampled voltages as emitted by the DACs.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedWaveform {
    pub electrode_names: Vec<String>,
    /// M rows of N voltages; sample `m` is held over `[m / R, (m + 1) / R)`.
    pub samples: Vec<Vec<f64>>,
    pub rate: f64,
    /// Index of the waveform step each sample was drawn from.
    pub source_rows: Vec<usize>,
    /// Commanded well position per sample; empty when unknown (e.g. read from disk).
    pub positions: Vec<Vec3>,
}

impl TimedWaveform {
    pub fn new(electrode_names: Vec<String>, samples: Vec<Vec<f64>>, rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::invalid("timed waveform needs at least one sample"));
        }
        if samples.iter().any(|r| r.len() != electrode_names.len()) {
            return Err(Error::invalid("sample width differs from electrode count"));
        }
        let m = samples.len();
        Ok(TimedWaveform {
            electrode_names,
            samples,
            rate,
            source_rows: (0..m).collect(),
            positions: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_electrodes(&self) -> usize {
        self.electrode_names.len()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 / self.rate
    }

    /// Samples of one electrode.
    pub fn channel(&self, n: usize) -> Vec<f64> {
        self.samples.iter().map(|r| r[n]).collect()
    }

    /// Append `other` (same rate and electrodes), e.g. the return leg of a round trip.
    pub fn concat(&self, other: &TimedWaveform) -> Result<Self> {
        if other.rate != self.rate || other.electrode_names != self.electrode_names {
            return Err(Error::invalid("cannot join waveforms with different rate or electrodes"));
        }
        let mut out = self.clone();
        out.samples.extend(other.samples.iter().cloned());
        out.source_rows.extend(&other.source_rows);
        if self.positions.len() == self.len() && other.positions.len() == other.len() {
            out.positions.extend(&other.positions);
        } else {
            out.positions.clear();
        }
        Ok(out)
    }

    /// Extend by holding the last sample `count` more times.
    pub fn hold(&self, count: usize) -> Self {
        let mut out = self.clone();
        let last = out.samples[out.samples.len() - 1].clone();
        let src = out.source_rows[out.source_rows.len() - 1];
        let pos = out.positions.last().copied();
        for _ in 0..count {
            out.samples.push(last.clone());
            out.source_rows.push(src);
            if let Some(p) = pos {
                out.positions.push(p);
            }
        }
        out
    }

    /// Repeat every sample `factor` times at `factor` times the rate: the same
    /// staircase on a finer time grid.
    pub fn upsample_hold(&self, factor: usize) -> Self {
        let rep = |n: usize| (0..n).flat_map(move |m| std::iter::repeat_n(m, factor));
        let idx: Vec<usize> = rep(self.len()).collect();
        TimedWaveform {
            electrode_names: self.electrode_names.clone(),
            samples: idx.iter().map(|&m| self.samples[m].clone()).collect(),
            rate: self.rate * factor as f64,
            source_rows: idx.iter().map(|&m| self.source_rows[m]).collect(),
            positions: if self.positions.len() == self.len() {
                idx.iter().map(|&m| self.positions[m]).collect()
            } else {
                Vec::new()
            },
        }
    }

    /// Voltages held at time `t` (zero-order hold, clamped to the ends).
    pub fn at(&self, t: f64) -> &[f64] {
        let m = ((t * self.rate).floor().max(0.0) as usize).min(self.len() - 1);
        &self.samples[m]
    }
}

/// Map waveform rows to DAC samples with zero-order hold.
///
/// The motion part has `round(duration * rate)` samples; sample `m` takes
/// the row nearest arc-length fraction `progress(m / (M - 1))`.
pub fn time_waveform(w: &Waveform, profile: &TimingProfile, rate: f64) -> Result<TimedWaveform> {
    if !(profile.duration > 0.0) || !(rate > 0.0) {
        return Err(Error::invalid("duration and rate must be positive"));
    }
    let k = w.len();
    let m = (profile.duration * rate).round() as usize;
    if m < k {
        return Err(Error::invalid(format!(
            "duration {:.3e} s gives {m} samples, fewer than the {k} waveform steps",
            profile.duration
        )));
    }
    let arc = arc_lengths(&w.positions);
    let total = arc[k - 1];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let u = if m == 1 { 0.0 } else { i as f64 / (m - 1) as f64 };
        let frac = profile.progress(u);
        let row = if total > 0.0 {
            nearest(&arc, frac * total)
        } else {
            ((frac * (k - 1) as f64).round() as usize).min(k - 1)
        };
        rows.push(row);
    }
    let mut hit = vec![false; k];
    rows.iter().for_each(|&r| hit[r] = true);
    if let Some(miss) = hit.iter().position(|h| !h) {
        return Err(Error::invalid(format!(
            "duration too short: waveform step {miss} is never emitted"
        )));
    }
    for d in &profile.dwells {
        if !(d.seconds >= 0.0) {
            return Err(Error::invalid("dwell time must be non-negative"));
        }
        let target = nearest_position(&w.positions, &d.position);
        let extra = (d.seconds * rate).round() as usize;
        if let Some(at) = rows.iter().position(|&r| r == target) {
            rows.splice(at..at, std::iter::repeat_n(target, extra));
        }
    }
    let samples = rows.iter().map(|&r| w.steps[r].clone()).collect();
    Ok(TimedWaveform {
        electrode_names: w.electrode_names.clone(),
        samples,
        rate,
        positions: rows.iter().map(|&r| w.positions[r]).collect(),
        source_rows: rows,
    })
}

/// Emit every waveform row once, in order, at `rate`.
pub fn time_rows(w: &Waveform, rate: f64) -> Result<TimedWaveform> {
    if !(rate > 0.0) {
        return Err(Error::invalid("rate must be positive"));
    }
    Ok(TimedWaveform {
        electrode_names: w.electrode_names.clone(),
        samples: w.steps.clone(),
        rate,
        source_rows: (0..w.len()).collect(),
        positions: w.positions.clone(),
    })
}

fn arc_lengths(p: &[Vec3]) -> Vec<f64> {
    let mut s = vec![0.0];
    for w in p.windows(2) {
        s.push(s[s.len() - 1] + (w[1] - w[0]).norm());
    }
    s
}

fn nearest(sorted: &[f64], x: f64) -> usize {
    let i = sorted.partition_point(|&v| v < x);
    if i == 0 {
        0
    } else if i >= sorted.len() {
        sorted.len() - 1
    } else if x - sorted[i - 1] <= sorted[i] - x {
        i - 1
    } else {
        i
    }
}

fn nearest_position(p: &[Vec3], r: &Vec3) -> usize {
    (0..p.len())
        .min_by(|&a, &b| (p[a] - r).norm().total_cmp(&(p[b] - r).norm()))
        .unwrap_or(0)
}

/// Round every sample to a symmetric mid-tread DAC grid with step
/// `2 * range / 2^bits`; codes run from `-2^(bits-1)` to `+2^(bits-1)` so that
/// 0 and both rails are exact. Out-of-range samples clip to the rails.
pub fn quantize(tw: &TimedWaveform, bits: u32, range: f64) -> TimedWaveform {
    let lsb = dac_lsb(bits, range);
    let top = (1u64 << (bits - 1)) as f64;
    let mut out = tw.clone();
    for row in &mut out.samples {
        for v in row.iter_mut() {
            let code = (*v / lsb).round().clamp(-top, top);
            *v = code * lsb;
        }
    }
    out
}

pub fn dac_lsb(bits: u32, range: f64) -> f64 {
    2.0 * range / (1u64 << bits) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(k: usize) -> Waveform {
        let pos = (0..k).map(|i| Vec3::new(0.0, 0.0, i as f64 * 5e-6)).collect();
        let steps = (0..k).map(|i| vec![i as f64]).collect();
        Waveform::from_rows(vec!["a".into()], pos, steps).unwrap()
    }

    #[test]
    fn two_steps_two_samples() {
        let tw = time_waveform(&ramp(2), &TimingProfile::constant(2.0 / 480e3), 480e3).unwrap();
        assert_eq!(tw.samples, vec![vec![0.0], vec![1.0]]);
    }

    #[test]
    fn too_short_rejected() {
        assert!(time_waveform(&ramp(10), &TimingProfile::constant(5.0 / 480e3), 480e3).is_err());
        assert!(time_waveform(&ramp(10), &TimingProfile::sinusoidal(10.0 / 480e3), 480e3).is_err());
    }

    #[test]
    fn sinusoidal_starts_and_ends_slowly() {
        let tw = time_waveform(&ramp(50), &TimingProfile::sinusoidal(400.0 / 1e6), 1e6).unwrap();
        let r = &tw.source_rows;
        assert_eq!(r[0], r[1]);
        assert_eq!(r[r.len() - 1], r[r.len() - 2]);
        assert!(r.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn dwell_repeats_row() {
        let w = ramp(5);
        let p = TimingProfile::constant(5e-6).with_dwell(Vec3::new(0.0, 0.0, 10e-6), 3e-6);
        let tw = time_waveform(&w, &p, 1e6).unwrap();
        assert_eq!(tw.source_rows, vec![0, 1, 2, 2, 2, 2, 3, 4]);
    }

    #[test]
    fn upsample_keeps_staircase() {
        let tw = time_waveform(&ramp(3), &TimingProfile::constant(3e-6), 1e6).unwrap();
        let up = tw.upsample_hold(4);
        assert_eq!(up.len(), 12);
        assert_eq!(up.rate, 4e6);
        for k in 0..30 {
            let t = k as f64 * 1e-7;
            assert_eq!(up.at(t), tw.at(t));
        }
        assert_eq!(up.positions[5], tw.positions[1]);
    }

    #[test]
    fn quantizer_rails_and_zero() {
        let tw = TimedWaveform::new(vec!["a".into()], vec![vec![0.0], vec![10.0], vec![-10.0], vec![12.0]], 1.0)
            .unwrap();
        let q = quantize(&tw, 16, 10.0);
        assert_eq!(q.channel(0), vec![0.0, 10.0, -10.0, 10.0]);
        assert_eq!(quantize(&q, 16, 10.0), q);
    }

    #[test]
    fn time_rows_emits_each_row_once() {
        let tw = time_rows(&ramp(5), 1e6).unwrap();
        assert_eq!(tw.source_rows, vec![0, 1, 2, 3, 4]);
        assert_eq!(tw.channel(0), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!((tw.duration() - 5e-6).abs() < 1e-18);
    }
}
