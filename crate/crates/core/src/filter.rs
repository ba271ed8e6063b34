//! Control-line low-pass filters: analog transfer functions and their
//! bilinear-transform discretizations for filtering DAC channels.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;

use crate::config::KeyValues;
use crate::constants::TWO_PI;
use crate::error::{Error, Result};
use crate::waveform::TimedWaveform;

/// Corner of each section of the original RC pair, Hz.
pub const RC_CORNER_HZ: f64 = 160e3;
/// Extra attenuation of the Butterworth replacement over the RC pair at 3.6 MHz, dB.
pub const REPLACEMENT_GAIN_DB: f64 = 22.0;
/// Frequency at which the replacement is matched, Hz.
pub const REPLACEMENT_MATCH_HZ: f64 = 3.6e6;

/// Series resistor followed by a shunt capacitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcSection {
    pub r: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    /// Ladder of RC sections, each loaded by the ones after it; open output.
    RcCascade(Vec<RcSection>),
    /// Ideal all-pole Butterworth of `order` with corner `corner` rad/s.
    Butterworth { order: usize, corner: f64 },
    /// `num(s) / den(s)`, coefficients in ascending powers of s.
    Rational { num: Vec<f64>, den: Vec<f64> },
}

/// Polynomial coefficients in ascending powers.
type Poly = Vec<f64>;

fn poly_mul(a: &[f64], b: &[f64]) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Poly {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

fn poly_eval(p: &[f64], s: Complex<f64>) -> Complex<f64> {
    p.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p[p.len() - 1] == 0.0 {
        p.pop();
    }
    p
}

/// Roots of a polynomial given in ascending powers, via the companion matrix.
fn roots(p: &[f64]) -> Vec<Complex<f64>> {
    let p = trim(p.to_vec());
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    // Solve in u = s / c with c balancing the end coefficients, so filters
    // specified in rad/s do not hand the eigensolver entries near 1e30.
    let c = if p[0] != 0.0 {
        (p[0] / p[n]).abs().powf(1.0 / n as f64)
    } else {
        1.0
    };
    let q: Vec<f64> = p.iter().enumerate().map(|(k, x)| x * c.powi(k as i32)).collect();
    let lead = q[n];
    let mut m = DMatrix::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -q[i] / lead;
    }
    m.complex_eigenvalues().iter().map(|u| u * c).collect()
}

/// Normalized Butterworth polynomial B_n(s) with B_n(0) = 1, ascending powers.
pub fn butterworth_polynomial(order: usize) -> Poly {
    let mut p = vec![1.0];
    for k in 1..=order / 2 {
        let theta = (2 * k + order - 1) as f64 * std::f64::consts::PI / (2 * order) as f64;
        p = poly_mul(&p, &[1.0, -2.0 * theta.cos(), 1.0]);
    }
    if order % 2 == 1 {
        p = poly_mul(&p, &[1.0, 1.0]);
    }
    p
}

impl FilterSpec {
    /// Two equal sections with 160 kHz corners (1 kOhm each).
    pub fn rc_pair() -> Self {
        let r = 1e3;
        let c = 1.0 / (TWO_PI * RC_CORNER_HZ * r);
        FilterSpec::RcCascade(vec![RcSection { r, c }; 2])
    }

    pub fn butterworth(order: usize, corner_hz: f64) -> Self {
        FilterSpec::Butterworth {
            order,
            corner: TWO_PI * corner_hz,
        }
    }

    /// Third-order Butterworth whose corner gives 22 dB more attenuation than
    /// the RC pair at 3.6 MHz.
    pub fn butterworth_replacement() -> Self {
        let w = TWO_PI * REPLACEMENT_MATCH_HZ;
        let target = FilterSpec::rc_pair().gain(w).0 * 10f64.powf(-REPLACEMENT_GAIN_DB / 20.0);
        // |G| = 1/sqrt(1 + (w/w0)^6)  =>  w0 = w / (1/|G|^2 - 1)^(1/6).
        let w0 = w / (target.powi(-2) - 1.0).powf(1.0 / 6.0);
        FilterSpec::Butterworth { order: 3, corner: w0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FilterSpec::RcCascade(s) => {
                if s.is_empty() || s.iter().any(|x| !(x.r > 0.0 && x.c > 0.0)) {
                    return Err(Error::invalid("RC sections need positive R and C"));
                }
            }
            FilterSpec::Butterworth { order, corner } => {
                if *order == 0 || !(*corner > 0.0) {
                    return Err(Error::invalid("Butterworth needs order >= 1 and a positive corner"));
                }
            }
            FilterSpec::Rational { num, den } => {
                if num.is_empty() || trim(den.clone()).len() < 2 {
                    return Err(Error::invalid("rational filter needs a numerator and a den of order >= 1"));
                }
                if num.len() > den.len() {
                    return Err(Error::invalid("rational filter must be proper"));
                }
                if num.iter().chain(den).any(|c| !c.is_finite()) {
                    return Err(Error::invalid("non-finite filter coefficient"));
                }
            }
        }
        if let Some(p) = self.poles().iter().find(|p| p.re >= 0.0) {
            return Err(Error::UnstableFilter { radius: p.norm() });
        }
        Ok(())
    }

    /// Transfer function as (numerator, denominator) in ascending powers of s.
    pub fn rational(&self) -> (Poly, Poly) {
        match self {
            FilterSpec::RcCascade(sections) => {
                // ABCD chain; each section is [[1 + sRC, R], [sC, 1]]. With the
                // output open only the first row of the product matters.
                let (mut a, mut b): (Poly, Poly) = (vec![1.0], vec![0.0]);
                for s in sections {
                    let na = poly_add(&poly_mul(&a, &[1.0, s.r * s.c]), &poly_mul(&b, &[0.0, s.c]));
                    let nb = poly_add(&poly_mul(&a, &[s.r]), &b);
                    (a, b) = (na, nb);
                }
                (vec![1.0], trim(a))
            }
            FilterSpec::Butterworth { order, corner } => {
                let den = butterworth_polynomial(*order)
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c / corner.powi(k as i32))
                    .collect();
                (vec![1.0], den)
            }
            FilterSpec::Rational { num, den } => (num.clone(), den.clone()),
        }
    }

    pub fn order(&self) -> usize {
        trim(self.rational().1).len() - 1
    }

    pub fn poles(&self) -> Vec<Complex<f64>> {
        roots(&self.rational().1)
    }

    /// Magnitude and phase (rad) at angular frequency `omega`.
    pub fn gain(&self, omega: f64) -> (f64, f64) {
        let (num, den) = self.rational();
        let s = Complex::new(0.0, omega);
        let h = poly_eval(&num, s) / poly_eval(&den, s);
        let mag = match self {
            FilterSpec::Butterworth { order, corner } => {
                1.0 / (1.0 + (omega / corner).powi(2 * *order as i32)).sqrt()
            }
            _ => h.norm(),
        };
        (mag, h.arg())
    }

    /// Angular frequency where the magnitude first drops to 1/sqrt(2).
    pub fn corner(&self) -> Result<f64> {
        if let FilterSpec::Butterworth { corner, .. } = self {
            return Ok(*corner);
        }
        let dc = self.gain(0.0).0;
        let level = dc / std::f64::consts::SQRT_2;
        let mut hi = 1.0;
        while self.gain(hi).0 > level {
            hi *= 2.0;
            if hi > 1e20 {
                return Err(Error::invalid("filter has no -3 dB corner"));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.gain(mid).0 > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let kind = kv.raw("kind").unwrap_or("butterworth");
        let spec = match kind {
            "rc_cascade" | "rc" => match kv.raw("sections") {
                None => FilterSpec::rc_pair(),
                Some(text) => {
                    let sections = text
                        .split(',')
                        .map(|t| {
                            let (r, c) = t.trim().split_once(':').ok_or_else(|| {
                                Error::invalid(format!("section {t:?} is not R:C"))
                            })?;
                            let parse = |x: &str| {
                                x.trim()
                                    .parse::<f64>()
                                    .map_err(|e| Error::invalid(format!("section {t:?}: {e}")))
                            };
                            Ok(RcSection {
                                r: parse(r)?,
                                c: parse(c)?,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    FilterSpec::RcCascade(sections)
                }
            },
            "butterworth" | "butterworth_ideal" => {
                if kv.raw("corner_hz").is_none() && kv.raw("order").is_none() {
                    FilterSpec::butterworth_replacement()
                } else {
                    let order = kv.get_or("order", 3usize)?;
                    let corner_hz = kv
                        .get::<f64>("corner_hz")?
                        .ok_or_else(|| Error::invalid("butterworth filter needs corner_hz"))?;
                    FilterSpec::butterworth(order, corner_hz)
                }
            }
            "rational" => FilterSpec::Rational {
                num: kv.list("num")?.ok_or_else(|| Error::invalid("rational filter needs num"))?,
                den: kv.list("den")?.ok_or_else(|| Error::invalid("rational filter needs den"))?,
            },
            other => return Err(Error::invalid(format!("unknown filter kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Sampled response over `freqs_hz` with unwrapped phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponsePoint {
    pub f_hz: f64,
    pub mag: f64,
    pub mag_db: f64,
    pub phase: f64,
}

pub fn frequency_response(spec: &FilterSpec, freqs_hz: &[f64]) -> Vec<ResponsePoint> {
    let mut out: Vec<ResponsePoint> = Vec::with_capacity(freqs_hz.len());
    for &f in freqs_hz {
        let (mag, mut phase) = spec.gain(TWO_PI * f);
        if let Some(prev) = out.last() {
            while phase - prev.phase > std::f64::consts::PI {
                phase -= TWO_PI;
            }
            while prev.phase - phase > std::f64::consts::PI {
                phase += TWO_PI;
            }
        }
        out.push(ResponsePoint {
            f_hz: f,
            mag,
            mag_db: 20.0 * mag.log10(),
            phase,
        });
    }
    out
}

/// One second-order section, direct form II transposed, `a0 == 1`.
/// First-order sections carry zeros in their last coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Section {
    fn order(&self) -> usize {
        if self.a[2] != 0.0 || self.b[2] != 0.0 {
            2
        } else {
            1
        }
    }

    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    fn at(&self, z: Complex<f64>) -> Complex<f64> {
        let zi = z.inv();
        let eval = |c: &[f64; 3]| Complex::new(c[0], 0.0) + zi * (c[1] + zi * c[2]);
        eval(&self.b) / eval(&self.a)
    }
}

/// IIR filter as a cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalFilter {
    pub sections: Vec<Section>,
    order: usize,
}

/// Internal state of one channel; one value per pole, section after section.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub s: Vec<f64>,
}

/// Monic factor `1 + c1 z^-1 + c2 z^-2` with the given roots in z.
fn z_factor(roots: &[Complex<f64>]) -> [f64; 3] {
    match roots {
        [] => [1.0, 0.0, 0.0],
        [r] => [1.0, -r.re, 0.0],
        [r, q] => [1.0, -(r + q).re, (r * q).re],
        _ => unreachable!("at most two roots per section"),
    }
}

/// Roots grouped into conjugate pairs, then pairs of reals, then a lone real.
fn pair_roots(mut r: Vec<Complex<f64>>) -> Vec<Vec<Complex<f64>>> {
    let tol = |x: &Complex<f64>| 1e-9 * x.norm().max(1e-300);
    let mut groups = Vec::new();
    let mut reals = Vec::new();
    while let Some(x) = r.pop() {
        if x.im.abs() <= tol(&x) {
            reals.push(Complex::new(x.re, 0.0));
            continue;
        }
        let j = (0..r.len())
            .min_by(|&i, &k| (r[i] - x.conj()).norm().total_cmp(&(r[k] - x.conj()).norm()))
            .expect("complex roots come in conjugate pairs");
        let y = r.swap_remove(j);
        let m = 0.5 * (x + y.conj());
        groups.push(vec![m, m.conj()]);
    }
    // Closest-to-unit-circle reals share a section with the next closest.
    reals.sort_by(|a, b| a.re.total_cmp(&b.re));
    for c in reals.chunks(2) {
        groups.push(c.to_vec());
    }
    groups
}

impl DigitalFilter {
    /// Bilinear transform at sample rate `rate` Hz, pre-warped at the -3 dB corner.
    pub fn bilinear(spec: &FilterSpec, rate: f64) -> Result<Self> {
        spec.validate()?;
        let wc = spec.corner()?;
        if !(rate > 2.0 * wc / TWO_PI) {
            return Err(Error::invalid(format!(
                "sample rate {rate:.3e} Hz must exceed twice the corner {:.3e} Hz",
                wc / TWO_PI
            )));
        }
        let k = wc / (wc / (2.0 * rate)).tan();
        let (num, den) = spec.rational();
        let map = |p: Complex<f64>| (Complex::new(k, 0.0) + p) / (Complex::new(k, 0.0) - p);
        let poles: Vec<_> = roots(&den).into_iter().map(map).collect();
        let mut zeros: Vec<_> = roots(&num).into_iter().map(map).collect();
        // Zeros at infinity land on the Nyquist point.
        zeros.resize(poles.len(), Complex::new(-1.0, 0.0));
        let pole_groups = pair_roots(poles);
        let mut zero_groups = pair_roots(zeros).into_iter();
        let mut sections: Vec<Section> = pole_groups
            .iter()
            .map(|g| {
                let zg = zero_groups.next().unwrap_or_default();
                Section {
                    b: z_factor(&zg),
                    a: z_factor(g),
                }
            })
            .collect();
        // Leftover single zeros only occur with unequal grouping; fold them in.
        for zg in zero_groups {
            let s = sections.last_mut().expect("at least one pole");
            let extra = z_factor(&zg);
            let b = poly_mul(&s.b, &extra);
            if b[3..].iter().any(|c| *c != 0.0) {
                return Err(Error::invalid("filter zeros do not fit second-order sections"));
            }
            s.b = [b[0], b[1], b[2]];
        }
        let h0 = poly_eval(&num, Complex::new(0.0, 0.0)) / poly_eval(&den, Complex::new(0.0, 0.0));
        let gain = if h0.norm() > 1e-12 {
            // Unit DC gain per section, then the analog DC gain on the first.
            for s in sections.iter_mut() {
                let g = s.a.iter().sum::<f64>() / s.b.iter().sum::<f64>();
                s.b.iter_mut().for_each(|x| *x *= g);
            }
            h0.re
        } else {
            let z0 = Complex::from_polar(1.0, 2.0 * (wc / k).atan());
            let hd = sections.iter().fold(Complex::new(1.0, 0.0), |acc, s| acc * s.at(z0));
            let ha = poly_eval(&num, Complex::new(0.0, wc)) / poly_eval(&den, Complex::new(0.0, wc));
            (ha / hd).re
        };
        sections[0].b.iter_mut().for_each(|x| *x *= gain);
        let f = DigitalFilter {
            order: sections.iter().map(Section::order).sum(),
            sections,
        };
        let radius = f.pole_radius();
        if !(radius < 1.0) {
            return Err(Error::UnstableFilter { radius });
        }
        Ok(f)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Largest pole magnitude in the z plane.
    pub fn pole_radius(&self) -> f64 {
        self.sections
            .iter()
            .flat_map(|s| roots(&[s.a[2], s.a[1], s.a[0]]))
            .map(|r| r.norm())
            .fold(0.0, f64::max)
    }

    pub fn dc_gain(&self) -> f64 {
        self.sections.iter().map(Section::dc_gain).product()
    }

    /// Complex response at `omega` rad/s for sample rate `rate` Hz.
    pub fn response(&self, omega: f64, rate: f64) -> Complex<f64> {
        let z = Complex::from_polar(1.0, omega / rate);
        self.sections.iter().fold(Complex::new(1.0, 0.0), |acc, s| acc * s.at(z))
    }

    /// State that holds the output steady at the response to a constant input `x0`.
    pub fn warm_state(&self, x0: f64) -> FilterState {
        let mut x = x0;
        let mut s = Vec::with_capacity(self.order);
        for sec in &self.sections {
            let y = sec.dc_gain() * x;
            let s1 = sec.b[2] * x - sec.a[2] * y;
            s.push(sec.b[1] * x - sec.a[1] * y + s1);
            if sec.order() == 2 {
                s.push(s1);
            }
            x = y;
        }
        FilterState { s }
    }

    pub fn step(&self, st: &mut FilterState, x: f64) -> f64 {
        let mut v = x;
        let mut k = 0;
        for sec in &self.sections {
            let y = sec.b[0] * v + st.s[k];
            if sec.order() == 2 {
                st.s[k] = sec.b[1] * v - sec.a[1] * y + st.s[k + 1];
                st.s[k + 1] = sec.b[2] * v - sec.a[2] * y;
                k += 2;
            } else {
                st.s[k] = sec.b[1] * v - sec.a[1] * y;
                k += 1;
            }
            v = y;
        }
        v
    }

    /// Filter a whole series, warm-started at its first sample.
    pub fn run(&self, series: &[f64]) -> Vec<f64> {
        let Some(&x0) = series.first() else {
            return Vec::new();
        };
        let mut st = self.warm_state(x0);
        series.iter().map(|&x| self.step(&mut st, x)).collect()
    }
}

/// Filter one uniformly sampled channel.
pub fn apply(spec: &FilterSpec, series: &[f64], rate: f64) -> Result<Vec<f64>> {
    Ok(DigitalFilter::bilinear(spec, rate)?.run(series))
}

/// Filter every channel of a timed waveform, after repeating each sample
/// `oversample` times so the filter sees the staircase between DAC updates.
pub fn filter_waveform(spec: &FilterSpec, tw: &TimedWaveform, oversample: usize) -> Result<TimedWaveform> {
    let fine = tw.upsample_hold(oversample.max(1));
    let f = DigitalFilter::bilinear(spec, fine.rate)?;
    let channels: Vec<Vec<f64>> = (0..fine.n_electrodes())
        .into_par_iter()
        .map(|n| f.run(&fine.channel(n)))
        .collect();
    let mut out = fine;
    for (m, row) in out.samples.iter_mut().enumerate() {
        for (n, v) in row.iter_mut().enumerate() {
            *v = channels[n][m];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rc_is_first_order() {
        let rc = FilterSpec::RcCascade(vec![RcSection { r: 1e3, c: 1e-9 }]);
        let (num, den) = rc.rational();
        assert_eq!(num, vec![1.0]);
        assert_eq!(den[0], 1.0);
        assert!((den[1] - 1e-6).abs() < 1e-21);
        assert!((rc.corner().unwrap() - 1e6).abs() < 1e-3);
    }

    #[test]
    fn equal_pair_has_loading_term() {
        // Two equal loaded sections: 1 + 3 s tau + (s tau)^2.
        let tau = 1e-6;
        let rc = FilterSpec::RcCascade(vec![RcSection { r: 1e3, c: 1e-9 }; 2]);
        let den = rc.rational().1;
        assert!((den[1] - 3.0 * tau).abs() < 1e-20);
        assert!((den[2] - tau * tau).abs() < 1e-24);
    }

    #[test]
    fn butterworth_polynomials() {
        assert_eq!(butterworth_polynomial(1), vec![1.0, 1.0]);
        let b3 = butterworth_polynomial(3);
        let want = [1.0, 2.0, 2.0, 1.0];
        assert!(b3.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn replacement_corner_near_193_khz() {
        let FilterSpec::Butterworth { corner, .. } = FilterSpec::butterworth_replacement() else {
            panic!()
        };
        let f0 = corner / TWO_PI;
        assert!((f0 - 193e3).abs() < 2e3, "{f0}");
    }

    #[test]
    fn unstable_rational_rejected() {
        let spec = FilterSpec::Rational {
            num: vec![1.0],
            den: vec![-1.0, 1.0],
        };
        assert!(matches!(spec.validate(), Err(Error::UnstableFilter { .. })));
    }

    #[test]
    fn warm_start_holds_constant() {
        let f = DigitalFilter::bilinear(&FilterSpec::butterworth(3, 100e3), 10e6).unwrap();
        let y = f.run(&[2.5; 50]);
        let dev = y.iter().map(|v| (v - 2.5).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-10, "{dev:e}");
    }

    #[test]
    fn discrete_response_matches_prewarped_analog() {
        let spec = FilterSpec::rc_pair();
        let rate = 10e6;
        let f = DigitalFilter::bilinear(&spec, rate).unwrap();
        let wc = spec.corner().unwrap();
        let k = wc / (wc / (2.0 * rate)).tan();
        for w in [1e4, 3e5, 1e6, 5e6] {
            let warped = k * (w / (2.0 * rate)).tan();
            let (num, den) = spec.rational();
            let ha = poly_eval(&num, Complex::new(0.0, warped)) / poly_eval(&den, Complex::new(0.0, warped));
            assert!((f.response(w, rate) - ha).norm() < 1e-9, "{w}");
        }
    }

    #[test]
    fn low_rate_rejected() {
        assert!(DigitalFilter::bilinear(&FilterSpec::butterworth(3, 1e6), 1.5e6).is_err());
    }
}
