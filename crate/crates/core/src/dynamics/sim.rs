use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ions::{Crystal, IonState};
use crate::constants::{COULOMB_K, HBAR, TWO_PI};
use crate::error::{Error, Result};
use crate::potential::{TrapModel, Vec3};
use crate::waveform::TimedWaveform;

/// Steps per period of the fastest motion when `dt` is not given.
pub const STEPS_PER_PERIOD: f64 = 40.0;
/// Coarsest allowed resolution, steps per period.
pub const MIN_STEPS_PER_PERIOD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Kick-drift-kick velocity Verlet.
    #[default]
    Leapfrog,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RfMode {
    /// Time-averaged pseudopotential force.
    #[default]
    Pseudopotential,
    /// Explicit `q V_rf grad(phi_rf) cos(Omega t)` force; needs `dt` resolving Omega.
    FullRf,
}

/// Coherent sideband on the rf drive at `Omega + offset` with relative amplitude `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sideband {
    pub xi: f64,
    pub offset: f64,
    pub phase: f64,
}

/// Noise sources injected into a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sideband: Option<Sideband>,
    /// Rf voltage noise density at `Omega + omega_z` and `Omega - omega_z`, V^2/Hz.
    pub s_v_plus: f64,
    pub s_v_minus: f64,
    /// White electric-field noise, (V/m)^2/Hz per Cartesian component.
    pub s_e: f64,
    /// Hold each DAC sample (true) or interpolate linearly between samples.
    pub dac_staircase: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            sideband: None,
            s_v_plus: 0.0,
            s_v_minus: 0.0,
            s_e: 0.0,
            dac_staircase: true,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if let Some(sb) = self.sideband {
            if !(sb.xi.abs() < 0.1) {
                return Err(Error::invalid("sideband amplitude must satisfy |xi| < 0.1"));
            }
        }
        if !(self.s_v_plus >= 0.0 && self.s_v_minus >= 0.0 && self.s_e >= 0.0) {
            return Err(Error::invalid("noise densities must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Integration step; `None` picks 1/40 of the fastest period.
    pub dt: Option<f64>,
    pub integrator: Integrator,
    pub rf_mode: RfMode,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Time after the last sample over which final energies are averaged, in
    /// periods of the slowest mode.
    pub settle_periods: f64,
    /// Keep every n-th integration step in the result.
    pub record_every: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: None,
            integrator: Integrator::Leapfrog,
            rf_mode: RfMode::Pseudopotential,
            noise: NoiseModel::default(),
            seed: 0,
            settle_periods: 1.0,
            record_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
}

/// Final excitation of one normal mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeExcitation {
    pub label: String,
    pub omega: f64,
    /// Energy averaged over the settle window, J.
    pub energy: f64,
    /// `energy / (hbar omega)`; zero-point energy is not included.
    pub nbar: f64,
    /// Same quantity for the initial state in the first sample's well.
    pub initial_nbar: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationResult {
    pub modes: Vec<ModeExcitation>,
    /// Equilibrium positions in the final well.
    pub equilibrium: Vec<Vec3>,
    /// Largest distance between the ions' centre and the commanded position, m.
    pub max_displacement: f64,
    pub dt: f64,
    pub steps: usize,
    /// Simulated time including the settle window, s.
    pub duration: f64,
    pub final_state: IonState,
    pub trajectory: Vec<TrajectorySample>,
}

impl ExcitationResult {
    pub fn mode(&self, label: &str) -> Option<&ModeExcitation> {
        self.modes.iter().find(|m| m.label == label)
    }

    /// Mode with the largest displacement along z (centre of mass for two ions).
    pub fn axial(&self) -> &ModeExcitation {
        self.modes_along(&Vec3::z(), true)
    }

    /// Two-ion mode whose relative motion is most nearly along `dir`.
    pub fn stretch_along(&self, dir: &Vec3) -> &ModeExcitation {
        self.modes_along(dir, false)
    }

    fn modes_along(&self, dir: &Vec3, com: bool) -> &ModeExcitation {
        let score = |m: &ModeExcitation| {
            let v = &m.vector;
            if v.len() == 3 {
                return Vec3::new(v[0], v[1], v[2]).dot(dir).abs();
            }
            let a = Vec3::new(v[0], v[1], v[2]);
            let b = Vec3::new(v[3], v[4], v[5]);
            if com {
                (a + b).dot(dir).abs()
            } else {
                (a - b).dot(dir).abs()
            }
        };
        self.modes
            .iter()
            .max_by(|a, b| score(a).total_cmp(&score(b)))
            .expect("at least one mode")
    }

    /// Excitation gained: final minus initial quanta, per mode.
    pub fn delta_nbar(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.nbar - m.initial_nbar).collect()
    }
}

/// Per-step random draws.
#[derive(Debug, Clone, Copy, Default)]
struct StepNoise {
    /// In-phase (amplitude) and quadrature fractional rf noise.
    a: f64,
    b: f64,
    field: Vec3,
}

struct Engine<'a> {
    model: &'a TrapModel,
    cfg: SimConfig,
    rng: ChaCha8Rng,
    q_over_m: f64,
    coulomb: f64,
    /// Single-sided density of the fractional rf envelope, 1/Hz.
    s_env: f64,
}

/// Control voltages over one DAC sample period.
struct Segment<'a> {
    id: usize,
    v0: &'a [f64],
    v1: &'a [f64],
    t0: f64,
    t1: f64,
    interpolate: bool,
}

impl Segment<'_> {
    fn voltages_at(&self, t: f64, buf: &mut Vec<f64>) {
        buf.clear();
        if !self.interpolate || self.t1 <= self.t0 {
            buf.extend_from_slice(self.v0);
            return;
        }
        let f = ((t - self.t0) / (self.t1 - self.t0)).clamp(0.0, 1.0);
        buf.extend(self.v0.iter().zip(self.v1).map(|(a, b)| a + f * (b - a)));
    }
}

impl<'a> Engine<'a> {
    fn new(model: &'a TrapModel, cfg: SimConfig) -> Self {
        let sp = model.species();
        let vrf = model.drive().amplitude;
        let s_env = if vrf > 0.0 {
            (cfg.noise.s_v_plus + cfg.noise.s_v_minus) / (vrf * vrf)
        } else {
            0.0
        };
        Engine {
            model,
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            q_over_m: sp.charge / sp.mass,
            coulomb: COULOMB_K * sp.charge * sp.charge / sp.mass,
            s_env,
        }
    }

    fn draw(&mut self, dt: f64) -> StepNoise {
        let mut n = StepNoise::default();
        let gauss = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        if self.s_env > 0.0 {
            let sigma = (self.s_env / (2.0 * dt)).sqrt();
            n.a = sigma * gauss(&mut self.rng);
            if self.cfg.rf_mode == RfMode::FullRf {
                n.b = sigma * gauss(&mut self.rng);
            }
        }
        if self.cfg.noise.s_e > 0.0 {
            let sigma = (self.cfg.noise.s_e / (2.0 * dt)).sqrt();
            n.field = Vec3::new(gauss(&mut self.rng), gauss(&mut self.rng), gauss(&mut self.rng)) * sigma;
        }
        n
    }

    fn parts(&self, v: &[f64], x: &[Vec3], t: f64, out: &mut Vec<[Vec3; 3]>) -> Result<()> {
        out.clear();
        for (i, r) in x.iter().enumerate() {
            match self.model.gradient_parts(v, r) {
                Ok(p) => out.push(p),
                Err(Error::OutOfDomain { .. }) => return Err(Error::IonLost { ion: i, time: t }),
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// Acceleration from precomputed gradient parts at time `t`.
    fn accel(&self, parts: &[[Vec3; 3]], x: &[Vec3], t: f64, noise: &StepNoise, out: &mut Vec<Vec3>) {
        let drive = self.model.drive();
        let sideband = self.cfg.noise.sideband;
        let (ps, rf) = match self.cfg.rf_mode {
            RfMode::Pseudopotential => {
                let mut eps = noise.a;
                if let Some(sb) = sideband {
                    eps += sb.xi * (sb.offset * t + sb.phase).cos();
                }
                (1.0 + 2.0 * eps, 0.0)
            }
            RfMode::FullRf => {
                let ph = drive.omega * t;
                let mut c = (1.0 + noise.a) * ph.cos() + noise.b * ph.sin();
                if let Some(sb) = sideband {
                    c += sb.xi * ((drive.omega + sb.offset) * t + sb.phase).cos();
                }
                (0.0, drive.amplitude * c)
            }
        };
        out.clear();
        for p in parts {
            let grad = p[0] + p[1] * ps + p[2] * rf;
            out.push((noise.field - grad) * self.q_over_m);
        }
        if x.len() == 2 {
            let d = x[0] - x[1];
            let f = d * (self.coulomb / d.norm().powi(3));
            out[0] += f;
            out[1] -= f;
        }
    }
}

/// Fastest and slowest secular frequencies seen along the drive.
fn frequency_range(model: &TrapModel, tw: &TimedWaveform, crystals: &[&Crystal]) -> (f64, f64) {
    let mut hi = crystals.iter().map(|c| c.max_omega()).fold(0.0, f64::max);
    let lo = crystals.iter().map(|c| c.min_omega()).fold(f64::INFINITY, f64::min);
    if tw.positions.len() == tw.len() {
        let stride = (tw.len() / 64).max(1);
        for m in (0..tw.len()).step_by(stride) {
            if let Ok(modes) = model.modes_at(&tw.samples[m], &tw.positions[m]) {
                hi = modes.frequencies.iter().fold(hi, |a, &b| a.max(b));
            }
        }
    }
    if crystals.iter().any(|c| c.n_ions() == 2) {
        hi *= 3f64.sqrt();
    }
    (lo, hi)
}

/// Integrate the ions through the timed waveform, then hold the last sample
/// for the settle window and report the energy in each final normal mode.
pub fn simulate_transport(
    model: &TrapModel,
    tw: &TimedWaveform,
    initial: &IonState,
    cfg: &SimConfig,
) -> Result<ExcitationResult> {
    initial.validate()?;
    cfg.noise.validate()?;
    if tw.n_electrodes() != model.n_electrodes() {
        return Err(Error::DimensionMismatch {
            expected: model.n_electrodes(),
            found: tw.n_electrodes(),
        });
    }
    let first = Crystal::new(model, &tw.samples[0], &initial.positions)?;
    let last_row = &tw.samples[tw.len() - 1];
    let guess_last = if tw.positions.len() == tw.len() {
        let c = tw.positions[tw.len() - 1];
        shift_to(&initial.positions, c)
    } else {
        initial.positions.clone()
    };
    let last = Crystal::new(model, last_row, &guess_last)?;
    if !last.all_confined() {
        return Err(Error::invalid("final well is not confining"));
    }
    let (w_min, mut w_max) = frequency_range(model, tw, &[&first, &last]);
    if cfg.rf_mode == RfMode::FullRf {
        w_max = w_max.max(model.drive().omega);
    }
    let limit = TWO_PI / (MIN_STEPS_PER_PERIOD * w_max);
    let dt = cfg.dt.unwrap_or(TWO_PI / (STEPS_PER_PERIOD * w_max));
    if !(dt > 0.0) || dt > limit {
        return Err(Error::TimeStep { dt, limit });
    }

    let mut eng = Engine::new(model, *cfg);
    let mut x = initial.positions.clone();
    let mut vel = initial.velocities.clone();
    let mut rec = Vec::new();
    let mut steps = 0usize;
    let mut max_disp: f64 = 0.0;
    let period = 1.0 / tw.rate;
    let interpolate = !cfg.noise.dac_staircase;
    let mut stepper = Stepper::new(x.len(), model.n_electrodes());

    // The same step throughout, so the leapfrog keeps one conserved energy.
    let n_seg = ((period / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = period / n_seg as f64;
    for m in 0..tw.len() {
        let seg = Segment {
            id: m,
            v0: &tw.samples[m],
            v1: &tw.samples[(m + 1).min(tw.len() - 1)],
            t0: m as f64 * period,
            t1: (m + 1) as f64 * period,
            interpolate,
        };
        for k in 0..n_seg {
            let t = seg.t0 + k as f64 * h;
            stepper.step(&mut eng, &seg, &mut x, &mut vel, t, h)?;
            steps += 1;
            if let Some(every) = cfg.record_every {
                if steps % every == 0 {
                    rec.push(TrajectorySample {
                        t: t + h,
                        positions: x.clone(),
                        velocities: vel.clone(),
                    });
                }
            }
        }
        if tw.positions.len() == tw.len() {
            let centre = x.iter().sum::<Vec3>() / x.len() as f64;
            max_disp = max_disp.max((centre - tw.positions[m]).norm());
        }
    }

    // Settle window: hold the final sample and average the mode energies.
    let t_end = tw.len() as f64 * period;
    let settle = cfg.settle_periods.max(0.0) * TWO_PI / w_min;
    let n = ((settle / h).ceil() as usize).max(1);
    let seg = Segment {
        id: usize::MAX,
        v0: last_row,
        v1: last_row,
        t0: t_end,
        t1: t_end,
        interpolate: false,
    };
    let mut acc = vec![0.0; last.modes.len()];
    let mut state = IonState {
        positions: x.clone(),
        velocities: vel.clone(),
    };
    let count = if settle > 0.0 { n } else { 0 };
    let shadow_h = match cfg.integrator {
        Integrator::Leapfrog => h,
        Integrator::Rk4 => 0.0,
    };
    for k in 0..count {
        stepper.step(&mut eng, &seg, &mut state.positions, &mut state.velocities, t_end + k as f64 * h, h)?;
        steps += 1;
        for (a, e) in acc.iter_mut().zip(last.step_energies(&state, shadow_h)) {
            *a += e;
        }
    }
    let energies: Vec<f64> = if count > 0 {
        acc.iter().map(|a| a / count as f64).collect()
    } else {
        last.step_energies(&state, shadow_h)
    };
    let initial_q = first.quanta(initial);
    let modes = last
        .modes
        .iter()
        .enumerate()
        .map(|(i, mode)| {
            let init = first
                .modes
                .iter()
                .enumerate()
                .max_by(|a, b| {
                    a.1.vector.dot(&mode.vector).abs().total_cmp(&b.1.vector.dot(&mode.vector).abs())
                })
                .map(|(j, _)| initial_q[j])
                .unwrap_or(0.0);
            ModeExcitation {
                label: mode.label.clone(),
                omega: mode.omega(),
                energy: energies[i],
                nbar: energies[i] / (HBAR * mode.omega()),
                initial_nbar: init,
                vector: mode.vector.iter().copied().collect(),
            }
        })
        .collect();
    Ok(ExcitationResult {
        modes,
        equilibrium: last.equilibrium.clone(),
        max_displacement: max_disp,
        dt,
        steps,
        duration: t_end + count as f64 * h,
        final_state: state,
        trajectory: rec,
    })
}

/// Hold voltages `v` for `duration` seconds.
pub fn simulate_static(
    model: &TrapModel,
    v: &[f64],
    initial: &IonState,
    duration: f64,
    cfg: &SimConfig,
) -> Result<ExcitationResult> {
    if !(duration > 0.0) {
        return Err(Error::invalid("duration must be positive"));
    }
    let names = model.electrodes().iter().map(|e| e.name.clone()).collect();
    let tw = TimedWaveform::new(names, vec![v.to_vec()], 1.0 / duration)?;
    simulate_transport(model, &tw, initial, cfg)
}

fn shift_to(positions: &[Vec3], centre: Vec3) -> Vec<Vec3> {
    let c = positions.iter().sum::<Vec3>() / positions.len() as f64;
    positions.iter().map(|p| p - c + centre).collect()
}

/// Integration scratch space and the force cache of the leapfrog.
struct Stepper {
    parts: Vec<[Vec3; 3]>,
    acc: Vec<Vec3>,
    volts: Vec<f64>,
    /// Parts at the current position for the current segment, if still valid.
    cached: Option<(Vec<Vec3>, usize)>,
    cache_parts: Vec<[Vec3; 3]>,
    k: [Vec<Vec3>; 8],
    tmp_x: Vec<Vec3>,
}

impl Stepper {
    fn new(n_ions: usize, n_electrodes: usize) -> Self {
        Stepper {
            parts: Vec::with_capacity(n_ions),
            acc: Vec::with_capacity(n_ions),
            volts: Vec::with_capacity(n_electrodes),
            cached: None,
            cache_parts: Vec::with_capacity(n_ions),
            k: Default::default(),
            tmp_x: Vec::with_capacity(n_ions),
        }
    }

    fn step(
        &mut self,
        eng: &mut Engine,
        seg: &Segment,
        x: &mut [Vec3],
        v: &mut [Vec3],
        t: f64,
        h: f64,
    ) -> Result<()> {
        let noise = eng.draw(h);
        match eng.cfg.integrator {
            Integrator::Leapfrog => self.leapfrog(eng, seg, x, v, t, h, &noise),
            Integrator::Rk4 => self.rk4(eng, seg, x, v, t, h, &noise),
        }
    }

    /// Gradient parts at `x`, reusing the last evaluation when neither the
    /// position nor the (held) voltages changed.
    fn parts_at(&mut self, eng: &Engine, seg: &Segment, x: &[Vec3], t: f64) -> Result<()> {
        if !seg.interpolate {
            if let Some((cx, key)) = &self.cached {
                if *key == seg.id && cx.as_slice() == x {
                    self.parts.clone_from(&self.cache_parts);
                    return Ok(());
                }
            }
        }
        seg.voltages_at(t, &mut self.volts);
        eng.parts(&self.volts, x, t, &mut self.parts)?;
        if !seg.interpolate {
            self.cache_parts.clone_from(&self.parts);
            self.cached = Some((x.to_vec(), seg.id));
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn leapfrog(
        &mut self,
        eng: &Engine,
        seg: &Segment,
        x: &mut [Vec3],
        v: &mut [Vec3],
        t: f64,
        h: f64,
        noise: &StepNoise,
    ) -> Result<()> {
        self.parts_at(eng, seg, x, t)?;
        eng.accel(&self.parts, x, t, noise, &mut self.acc);
        for i in 0..x.len() {
            v[i] += self.acc[i] * (0.5 * h);
            x[i] += v[i] * h;
        }
        self.parts_at(eng, seg, x, t + h)?;
        eng.accel(&self.parts, x, t + h, noise, &mut self.acc);
        for i in 0..x.len() {
            v[i] += self.acc[i] * (0.5 * h);
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn rk4(
        &mut self,
        eng: &Engine,
        seg: &Segment,
        x: &mut [Vec3],
        v: &mut [Vec3],
        t: f64,
        h: f64,
        noise: &StepNoise,
    ) -> Result<()> {
        let n = x.len();
        // k[0..4] velocity slopes (accelerations), k[4..8] position slopes.
        let stages = [(0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)];
        for s in 0..4 {
            let (c, a) = stages[s];
            self.tmp_x.clear();
            let mut vel_s = Vec::with_capacity(n);
            for i in 0..n {
                let (dx, dv) = if s == 0 {
                    (Vec3::zeros(), Vec3::zeros())
                } else {
                    (self.k[4 + s - 1][i] * (a * h), self.k[s - 1][i] * (a * h))
                };
                self.tmp_x.push(x[i] + dx);
                vel_s.push(v[i] + dv);
            }
            let xs = std::mem::take(&mut self.tmp_x);
            self.parts_at(eng, seg, &xs, t + c * h)?;
            eng.accel(&self.parts, &xs, t + c * h, noise, &mut self.acc);
            self.tmp_x = xs;
            self.k[s].clone_from(&self.acc);
            self.k[4 + s] = vel_s;
        }
        for i in 0..n {
            v[i] += (self.k[0][i] + self.k[1][i] * 2.0 + self.k[2][i] * 2.0 + self.k[3][i]) * (h / 6.0);
            x[i] += (self.k[4][i] + self.k[5][i] * 2.0 + self.k[6][i] * 2.0 + self.k[7][i]) * (h / 6.0);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{angular, Species};
    use crate::potential::synth::{quadrupole_k_for, synth_harmonic_trap, HARMONIC_AXIAL_CURVATURE};
    use crate::potential::SpatialGrid;

    fn harmonic(f_axial: f64) -> (TrapModel, Vec<f64>) {
        let grid = SpatialGrid::covering(Vec3::new(-20e-6, -20e-6, -40e-6), Vec3::new(20e-6, 20e-6, 40e-6), 5e-6).unwrap();
        let drive = crate::potential::RfDrive {
            amplitude: 200.0,
            omega: angular(83e6),
        };
        let sp = Species::beryllium9();
        let k = quadrupole_k_for(angular(10e6), drive, sp);
        let model = synth_harmonic_trap(&grid, k, drive, sp).unwrap();
        let v = vec![0.0, 0.0, 0.0, sp.curvature_for(angular(f_axial)) / HARMONIC_AXIAL_CURVATURE];
        (model, v)
    }

    #[test]
    fn ion_at_rest_stays_cold() {
        let (model, v) = harmonic(3.6e6);
        let init = IonState::single_at_minimum(&model, &v, &Vec3::zeros()).unwrap();
        let res = simulate_static(&model, &v, &init, 20e-6, &SimConfig::default()).unwrap();
        assert!(res.modes.iter().all(|m| m.nbar < 1e-6));
        assert!((res.axial().omega / angular(3.6e6) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn displaced_ion_keeps_its_energy() {
        let (model, v) = harmonic(3.6e6);
        let mut init = IonState::at_rest(vec![Vec3::new(0.0, 0.0, 1e-6)]);
        init.velocities[0].x = 0.3;
        // A step that divides both durations, so both runs share one shadow energy.
        let cfg = SimConfig {
            dt: Some(2.5e-9),
            ..SimConfig::default()
        };
        let short = simulate_static(&model, &v, &init, 1e-6, &cfg).unwrap();
        let long = simulate_static(&model, &v, &init, 100e-6, &cfg).unwrap();
        for (a, b) in short.modes.iter().zip(&long.modes) {
            assert!((a.energy - b.energy).abs() <= 1e-8 * a.energy.max(1e-30), "{} {} {}", a.label, a.energy, b.energy);
        }
        let rk = SimConfig {
            integrator: Integrator::Rk4,
            dt: None,
            ..cfg
        };
        let r = simulate_static(&model, &v, &init, 20e-6, &rk).unwrap();
        let rel = r.axial().energy / short.axial().energy - 1.0;
        assert!(rel.abs() < 1e-3, "{rel}");
    }

    #[test]
    fn two_ions_stretch_at_sqrt3() {
        let (model, v) = harmonic(2e6);
        let pair = IonState::pair_at_equilibrium(&model, &v, &Vec3::zeros(), &Vec3::z()).unwrap();
        let c = Crystal::new(&model, &v, &pair.positions).unwrap();
        let com = c.mode("com_z").unwrap().omega();
        let st = c.mode("str_z").unwrap().omega();
        assert!((st / com - 3f64.sqrt()).abs() < 1e-6);
        assert!((com / angular(2e6) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coarse_step_rejected() {
        let (model, v) = harmonic(3.6e6);
        let init = IonState::single_at_minimum(&model, &v, &Vec3::zeros()).unwrap();
        let cfg = SimConfig {
            dt: Some(1e-8),
            ..SimConfig::default()
        };
        assert!(matches!(
            simulate_static(&model, &v, &init, 1e-6, &cfg),
            Err(Error::TimeStep { .. })
        ));
    }

    #[test]
    fn same_seed_same_noise() {
        let (model, v) = harmonic(3.6e6);
        let init = IonState::single_at_minimum(&model, &v, &Vec3::zeros()).unwrap();
        let cfg = SimConfig {
            noise: NoiseModel {
                s_e: 1e-10,
                ..NoiseModel::default()
            },
            seed: 7,
            ..SimConfig::default()
        };
        let a = simulate_static(&model, &v, &init, 5e-6, &cfg).unwrap();
        let b = simulate_static(&model, &v, &init, 5e-6, &cfg).unwrap();
        assert_eq!(a.final_state, b.final_state);
        assert!(a.axial().nbar > 0.0);
    }
}
