//! Turning settings into models, waveforms and simulation options.

use std::path::{Path, PathBuf};

use crate::config::KeyValues;
use crate::constants::angular;
use crate::dynamics::{Integrator, NoiseModel, SimConfig};
use crate::error::{Error, Result};
use crate::filter::FilterSpec;
use crate::potential::synth::{axis_grid, quadrupole_k_for};
use crate::potential::{
    load_model, synth_junction_trap, synth_linear_trap, JunctionParams, LinearTrapParams, RfDrive, TrapModel, Vec3,
};
use crate::solver::SolverOptions;
use crate::waveform::io::read_waveform;
use crate::waveform::{
    build_waveform, time_rows, time_waveform, ConstraintTemplate, FrequencySchedule, TimedWaveform, TimingProfile,
    Trajectory, Waveform, DEFAULT_DAC_RATE,
};

/// Merged settings of one run and its output directory.
#[derive(Debug, Clone)]
pub struct Settings {
    pub kv: KeyValues,
    pub out: PathBuf,
}

impl Settings {
    pub fn new(kv: KeyValues, out: PathBuf) -> Self {
        Settings { kv, out }
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.kv.get_or(key, default)?;
        if !v.is_finite() {
            return Err(Error::invalid(format!("{key} must be finite")));
        }
        Ok(v)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.kv.get_or(key, default)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        self.kv.get_or(key, default)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.kv.raw(key).unwrap_or(default)
    }

    pub fn seed(&self) -> Result<u64> {
        self.kv.get_or("seed", 0u64)
    }

    /// A point given in micrometres as `x,y,z`, or a bare `z`.
    pub fn point_um(&self, key: &str) -> Result<Option<Vec3>> {
        let Some(v) = self.kv.list(key)? else {
            return Ok(None);
        };
        let p = match v.as_slice() {
            [z] => Vec3::new(0.0, 0.0, *z),
            [x, y, z] => Vec3::new(*x, *y, *z),
            _ => return Err(Error::invalid(format!("{key} needs `z` or `x,y,z` in um"))),
        };
        Ok(Some(p * 1e-6))
    }

    /// Keys under `prefix.` with the prefix removed.
    pub fn section(&self, prefix: &str) -> KeyValues {
        let mut kv = KeyValues::new();
        let head = format!("{prefix}.");
        for k in self.kv.keys() {
            if let Some(rest) = k.strip_prefix(&head) {
                kv.set(rest, self.kv.raw(k).unwrap_or_default());
            }
        }
        kv
    }

    /// The model named by `trap`: `linear`, `junction`, or a manifest path.
    pub fn model(&self) -> Result<TrapModel> {
        let kind = self.str_or("trap", "linear");
        let (lo, hi) = match kind {
            "linear" => (-200.0, 200.0),
            "junction" => (-460.0, 60.0),
            path => return load_model(Path::new(path)),
        };
        let grid = axis_grid(
            self.f64_or("grid.z_min_um", lo)? * 1e-6,
            self.f64_or("grid.z_max_um", hi)? * 1e-6,
            self.f64_or("grid.spacing_um", 5.0)? * 1e-6,
        )?;
        let mut linear = match kind {
            "junction" => JunctionParams::default().trap,
            _ => LinearTrapParams::default(),
        };
        linear.drive = RfDrive {
            amplitude: self.f64_or("rf.amplitude_v", linear.drive.amplitude)?,
            omega: angular(self.f64_or("rf.freq_mhz", linear.drive.omega / angular(1e6))? * 1e6),
        };
        linear.quadrupole_k = quadrupole_k_for(
            angular(self.f64_or("radial_mhz", 10.0)? * 1e6),
            linear.drive,
            linear.species,
        );
        if kind == "linear" {
            return synth_linear_trap(&linear, &grid);
        }
        let d = JunctionParams::default();
        let params = JunctionParams {
            trap: linear,
            barrier_height: self.f64_or("junction.barrier_ev", d.barrier_height)?,
            asymmetry: self.f64_or("junction.asymmetry", d.asymmetry)?,
            ..d
        };
        synth_junction_trap(&params, &grid)
    }

    pub fn solver_options(&self) -> Result<SolverOptions> {
        let d = SolverOptions::default();
        Ok(SolverOptions {
            v_max: self.f64_or("solver.v_max", d.v_max)?,
            alpha: self.kv.get("solver.alpha")?.unwrap_or(d.alpha),
            residual_tol: self.f64_or("solver.residual_tol", d.residual_tol)?,
            max_iterations: self.usize_or("solver.max_iterations", d.max_iterations)?,
        })
    }

    /// `freq_mhz`, or `schedule = s_um:f_mhz, ...` along the arc length.
    pub fn schedule(&self) -> Result<FrequencySchedule> {
        let Some(text) = self.kv.raw("schedule") else {
            return Ok(FrequencySchedule::constant(angular(self.f64_or("freq_mhz", 3.6)? * 1e6)));
        };
        let knots = text
            .split(',')
            .map(|t| {
                let (s, f) = t
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::invalid(format!("schedule knot {t:?} is not s_um:f_mhz")))?;
                let num = |x: &str| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::invalid(format!("schedule knot {t:?}: {e}")))
                };
                Ok((num(s)? * 1e-6, angular(num(f)? * 1e6)))
            })
            .collect::<Result<Vec<_>>>()?;
        FrequencySchedule::piecewise(knots)
    }

    pub fn rate(&self) -> Result<f64> {
        let r = self.f64_or("timing.rate_khz", DEFAULT_DAC_RATE / 1e3)? * 1e3;
        if !(r > 0.0) {
            return Err(Error::invalid("timing.rate_khz must be positive"));
        }
        Ok(r)
    }

    fn profile(&self, kind: &str, duration: f64) -> Result<TimingProfile> {
        match kind {
            "constant" => Ok(TimingProfile::constant(duration)),
            "sinusoidal" => Ok(TimingProfile::sinusoidal(duration)),
            other => Err(Error::invalid(format!("unknown timing profile {other:?}"))),
        }
    }

    /// The path from `path.from_um` to `path.to_um`, or a single point when
    /// `path.to_um` is absent. With `timing.retime` the points are respaced
    /// to one per DAC sample of that profile.
    pub fn trajectory(&self) -> Result<Trajectory> {
        let from = self.point_um("path.from_um")?.unwrap_or_else(Vec3::zeros);
        let Some(to) = self.point_um("path.to_um")? else {
            return Ok(Trajectory::point(from));
        };
        let step = self.f64_or("path.step_um", 5.0)? * 1e-6;
        let t = Trajectory::line(from, to, step)?;
        match self.kv.raw("timing.retime") {
            None => Ok(t),
            Some(kind) => {
                let duration = self
                    .kv
                    .get::<f64>("timing.duration_us")?
                    .ok_or_else(|| Error::invalid("timing.retime needs timing.duration_us"))?
                    * 1e-6;
                t.retimed(&self.profile(kind, duration)?, self.rate()?)
            }
        }
    }

    /// The waveform from the file named by `waveform`, or solved from the path settings.
    pub fn waveform(&self, model: &TrapModel) -> Result<Waveform> {
        if let Some(p) = self.kv.raw("waveform") {
            let w = read_waveform(p)?;
            if w.n_electrodes() != model.n_electrodes() {
                return Err(Error::DimensionMismatch {
                    expected: model.n_electrodes(),
                    found: w.n_electrodes(),
                });
            }
            return Ok(w);
        }
        build_waveform(
            model,
            &self.trajectory()?,
            &self.schedule()?,
            &ConstraintTemplate::default(),
            &self.solver_options()?,
        )
    }

    /// Play `w` at the DAC rate: one row per sample (`timing.profile = rows`,
    /// the default), or stretched over `timing.duration_us` with a
    /// constant or sinusoidal velocity profile.
    pub fn timed(&self, w: &Waveform) -> Result<TimedWaveform> {
        let rate = self.rate()?;
        match self.str_or("timing.profile", "rows") {
            "rows" => time_rows(w, rate),
            kind => {
                let duration = self
                    .kv
                    .get::<f64>("timing.duration_us")?
                    .ok_or_else(|| Error::invalid("timing.profile needs timing.duration_us"))?
                    * 1e-6;
                time_waveform(w, &self.profile(kind, duration)?, rate)
            }
        }
    }

    /// The filter of the `filter.` section; `None` for `filter.kind = none`
    /// or when `default_kind` is `none` and no kind is given.
    pub fn filter(&self, default_kind: &str) -> Result<Option<FilterSpec>> {
        let mut kv = self.section("filter");
        let kind = kv.raw("kind").unwrap_or(default_kind).to_string();
        if kind == "none" {
            return Ok(None);
        }
        kv.set("kind", &kind);
        FilterSpec::from_kv(&kv).map(Some)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let d = SimConfig::default();
        let s_v = self.f64_or("noise.s_v", 0.0)?;
        let integrator = match self.str_or("sim.integrator", "leapfrog") {
            "leapfrog" => Integrator::Leapfrog,
            "rk4" => Integrator::Rk4,
            other => return Err(Error::invalid(format!("unknown integrator {other:?}"))),
        };
        Ok(SimConfig {
            dt: self.kv.get::<f64>("sim.dt_ns")?.map(|x| x * 1e-9),
            integrator,
            noise: NoiseModel {
                s_v_plus: 0.5 * s_v,
                s_v_minus: 0.5 * s_v,
                s_e: self.f64_or("noise.s_e", 0.0)?,
                dac_staircase: self.bool_or("noise.staircase", true)?,
                ..NoiseModel::default()
            },
            seed: self.seed()?,
            settle_periods: self.f64_or("sim.settle_periods", d.settle_periods)?,
            record_every: self.kv.get("sim.record_every")?,
            ..d
        })
    }
}
