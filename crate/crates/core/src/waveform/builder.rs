use super::timing::TimingProfile;
use crate::error::{Error, Result};
use crate::potential::{ModeSolution, TrapModel, Vec3};
use crate::solver::{
    assemble, frame_from_axis, solve, ConstraintSpec, Row, SolverOptions, VoltageSolution,
};

/// Default distance between consecutive trajectory points, 5 um.
pub const DEFAULT_STEP: f64 = 5e-6;

/// Ordered points the potential minimum should visit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Vec3>,
}

impl Trajectory {
    pub fn new(waypoints: Vec<Vec3>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::invalid("trajectory needs at least one point"));
        }
        Ok(Trajectory { waypoints })
    }

    pub fn point(r: Vec3) -> Self {
        Trajectory { waypoints: vec![r] }
    }

    /// Evenly spaced points from `a` to `b`, no further apart than `step`.
    pub fn line(a: Vec3, b: Vec3, step: f64) -> Result<Self> {
        Trajectory::polyline(&[a, b], step)
    }

    /// Resample the polyline through `corners` so that every segment is split
    /// into equal pieces no longer than `step`.
    pub fn polyline(corners: &[Vec3], step: f64) -> Result<Self> {
        if corners.is_empty() {
            return Err(Error::invalid("polyline needs at least one point"));
        }
        if !(step > 0.0) {
            return Err(Error::invalid("trajectory step must be positive"));
        }
        let mut pts = vec![corners[0]];
        for w in corners.windows(2) {
            let len = (w[1] - w[0]).norm();
            let n = ((len / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            for i in 1..=n {
                pts.push(w[0] + (w[1] - w[0]) * (i as f64 / n as f64));
            }
        }
        Ok(Trajectory { waypoints: pts })
    }

    /// One point per DAC sample: the path position reached at each sample
    /// time of `profile` played at `rate`. A waveform built on it is played
    /// back with [`time_rows`](super::time_rows), one row per sample.
    pub fn retimed(&self, profile: &TimingProfile, rate: f64) -> Result<Self> {
        if !(profile.duration > 0.0) || !(rate > 0.0) {
            return Err(Error::invalid("duration and rate must be positive"));
        }
        let m = (profile.duration * rate).round() as usize;
        if m < 2 || self.len() < 2 {
            return Err(Error::invalid("retiming needs two or more points and samples"));
        }
        let arc = self.arc_lengths();
        let total = arc[arc.len() - 1];
        let pts = (0..m)
            .map(|i| {
                let s = profile.progress(i as f64 / (m - 1) as f64) * total;
                let j = arc.partition_point(|&a| a < s).clamp(1, arc.len() - 1);
                let seg = arc[j] - arc[j - 1];
                let f = if seg > 0.0 { (s - arc[j - 1]) / seg } else { 0.0 };
                self.waypoints[j - 1] + (self.waypoints[j] - self.waypoints[j - 1]) * f
            })
            .collect();
        Ok(Trajectory { waypoints: pts })
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    /// Cumulative arc length at each point, starting at 0.
    pub fn arc_lengths(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        s.push(0.0);
        for w in self.waypoints.windows(2) {
            acc += (w[1] - w[0]).norm();
            s.push(acc);
        }
        s
    }

    /// Unit direction of travel at point `i`; `+z` for a single point.
    pub fn tangent(&self, i: usize) -> Vec3 {
        let n = self.len();
        if n < 2 {
            return Vec3::z();
        }
        let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
        let d = self.waypoints[b] - self.waypoints[a];
        if d.norm() == 0.0 {
            Vec3::z()
        } else {
            d.normalize()
        }
    }

    pub fn reversed(&self) -> Self {
        let mut w = self.waypoints.clone();
        w.reverse();
        Trajectory { waypoints: w }
    }
}

/// Target axial frequency as a piecewise-linear function of arc length,
/// held constant beyond the end knots.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySchedule {
    knots: Vec<(f64, f64)>,
}

impl FrequencySchedule {
    pub fn constant(omega: f64) -> Self {
        FrequencySchedule {
            knots: vec![(0.0, omega)],
        }
    }

    /// `knots` are `(arc length m, omega rad/s)`, arc length non-decreasing.
    pub fn piecewise(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("schedule needs at least one knot"));
        }
        if knots.iter().any(|&(_, w)| !(w > 0.0)) {
            return Err(Error::invalid("scheduled frequencies must be positive"));
        }
        if knots.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::invalid("schedule knots must be ordered by arc length"));
        }
        Ok(FrequencySchedule { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn at(&self, s: f64) -> f64 {
        let k = &self.knots;
        if s <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            if s <= w[1].0 {
                let span = w[1].0 - w[0].0;
                if span == 0.0 {
                    return w[1].1;
                }
                let t = (s - w[0].0) / span;
                return w[0].1 + t * (w[1].1 - w[0].1);
            }
        }
        k[k.len() - 1].1
    }
}

/// Which constraint rows to impose at every step, in the frame whose z' axis
/// follows the trajectory. The default is the sparse transport set: position,
/// z' as a principal axis, and the z' frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintTemplate {
    pub active: [bool; 9],
    /// Fixed z' axis instead of the trajectory tangent.
    pub axis: Option<Vec3>,
    /// Radial targets for the x' and y' frequency rows when those are active.
    pub radial_targets: [Option<f64>; 2],
}

impl Default for ConstraintTemplate {
    fn default() -> Self {
        ConstraintTemplate {
            active: [true, true, true, false, false, true, false, true, true],
            axis: None,
            radial_targets: [None, None],
        }
    }
}

/// Weight given to position rows when the plain solve leaves them unmet.
pub const POSITION_PRIORITY: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepFlags {
    /// At least one voltage sits on the +-V_max bound.
    pub saturated: bool,
    /// Position rows met only after being given priority over the frequency rows.
    pub prioritized: bool,
    /// Achieved z' frequency misses the target by more than 2 %.
    pub off_target: bool,
}

/// Voltage rows along a trajectory with per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub electrode_names: Vec<String>,
    /// K rows of N voltages.
    pub steps: Vec<Vec<f64>>,
    pub positions: Vec<Vec3>,
    pub axes: Vec<Vec3>,
    pub target_omega: Vec<f64>,
    /// Signed secular frequency along z' (negative when anti-confined).
    pub achieved_omega: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Largest gradient residual among the position rows, V/m.
    pub position_residuals: Vec<f64>,
    pub modes: Vec<ModeSolution>,
    pub flags: Vec<StepFlags>,
}

impl Waveform {
    /// Waveform with only voltages and positions, e.g. read back from disk.
    pub fn from_rows(
        electrode_names: Vec<String>,
        positions: Vec<Vec3>,
        steps: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if positions.len() != steps.len() || steps.is_empty() {
            return Err(Error::invalid("waveform needs one position per row"));
        }
        if steps.iter().any(|r| r.len() != electrode_names.len()) {
            return Err(Error::invalid("waveform row length differs from electrode count"));
        }
        let k = steps.len();
        Ok(Waveform {
            electrode_names,
            steps,
            axes: vec![Vec3::z(); k],
            positions,
            target_omega: vec![0.0; k],
            achieved_omega: vec![0.0; k],
            residuals: vec![0.0; k],
            position_residuals: vec![0.0; k],
            modes: Vec::new(),
            flags: vec![StepFlags::default(); k],
        })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn n_electrodes(&self) -> usize {
        self.electrode_names.len()
    }

    /// Rows in reverse order: moves the well back along the trajectory.
    pub fn reversed(&self) -> Self {
        let mut w = self.clone();
        w.steps.reverse();
        w.positions.reverse();
        w.axes.reverse();
        w.target_omega.reverse();
        w.achieved_omega.reverse();
        w.residuals.reverse();
        w.position_residuals.reverse();
        w.modes.reverse();
        w.flags.reverse();
        w
    }

    /// Largest voltage change between consecutive rows.
    pub fn max_step_change(&self) -> f64 {
        self.steps
            .windows(2)
            .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

fn solve_step(
    model: &TrapModel,
    spec: &ConstraintSpec,
    opts: &SolverOptions,
    prev: Option<&[f64]>,
) -> Result<(VoltageSolution, Vec<Row>, bool)> {
    let system = assemble(spec, model)?;
    let sol = solve(&system, opts, prev)?;
    if sol.position_residual(&system.rows) <= opts.residual_tol {
        return Ok((sol, system.rows, false));
    }
    let strict = system.with_position_weight(POSITION_PRIORITY);
    let sol = solve(&strict, opts, prev)?;
    Ok((sol, system.rows, true))
}

/// Solve every trajectory point in order, each seeded by the previous one.
pub fn build_waveform(
    model: &TrapModel,
    trajectory: &Trajectory,
    schedule: &FrequencySchedule,
    template: &ConstraintTemplate,
    opts: &SolverOptions,
) -> Result<Waveform> {
    let arc = trajectory.arc_lengths();
    let k = trajectory.len();
    let names = model.electrodes().iter().map(|e| e.name.clone()).collect();
    let mut w = Waveform {
        electrode_names: names,
        steps: Vec::with_capacity(k),
        positions: trajectory.waypoints.clone(),
        axes: Vec::with_capacity(k),
        target_omega: Vec::with_capacity(k),
        achieved_omega: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
        position_residuals: Vec::with_capacity(k),
        modes: Vec::with_capacity(k),
        flags: Vec::with_capacity(k),
    };
    for (i, r0) in trajectory.waypoints.iter().enumerate() {
        let axis = template.axis.unwrap_or_else(|| trajectory.tangent(i)).normalize();
        let target = schedule.at(arc[i]);
        let spec = ConstraintSpec {
            r0: *r0,
            frame: frame_from_axis(&axis),
            targets: [template.radial_targets[0], template.radial_targets[1], Some(target)],
            active: template.active,
        };
        let prev = w.steps.last().map(|v: &Vec<f64>| v.as_slice());
        let (sol, rows, prioritized) = solve_step(model, &spec, opts, prev)?;
        let pos_res = sol.position_residual(&rows);
        if pos_res > opts.residual_tol {
            return Err(Error::PositionUnsatisfiable {
                step: i,
                residual: pos_res,
            });
        }
        let modes = model.modes_at(&sol.v, r0)?;
        let achieved = modes.frequency_along(&axis);
        let saturated = sol.v.iter().any(|v| v.abs() >= opts.v_max - 1e-9);
        w.flags.push(StepFlags {
            saturated,
            prioritized,
            off_target: ((achieved - target) / target).abs() > 0.02,
        });
        w.axes.push(axis);
        w.target_omega.push(target);
        w.achieved_omega.push(achieved);
        w.residuals.push(sol.residual);
        w.position_residuals.push(pos_res);
        w.modes.push(modes);
        w.steps.push(sol.v);
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retimed_follows_profile() {
        let line = Trajectory::line(Vec3::zeros(), Vec3::new(0.0, 0.0, 100e-6), 5e-6).unwrap();
        let t = line.retimed(&TimingProfile::sinusoidal(100e-6), 1e6).unwrap();
        assert_eq!(t.len(), 100);
        assert_eq!(t.waypoints[0], Vec3::zeros());
        assert!((t.waypoints[99].z - 100e-6).abs() < 1e-15);
        let s = t.arc_lengths();
        // Slow at both ends, fastest in the middle.
        assert!(s[1] < 0.05 * (s[50] - s[49]));
        assert!(s.windows(2).all(|w| w[1] >= w[0]));
        let c = line.retimed(&TimingProfile::constant(100e-6), 1e6).unwrap();
        let d: Vec<f64> = c.arc_lengths().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(d.iter().all(|x| (x - 100e-6 / 99.0).abs() < 1e-15));
    }
}
