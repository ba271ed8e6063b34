//! Analytic stand-in trap geometries.
//!
//! Control electrodes are rectangles in two grounded planes (gapless-plane
//! approximation, potential = subtended solid angle / 2 pi). The rf basis is an
//! ideal linear quadrupole, optionally with a pair of bridge line sources
//! inside a grounded channel which raise an axial pseudopotential barrier.
//! All terms solve Laplace's equation exactly away from their sources.

use std::f64::consts::PI;

use super::grid::{ScalarField, SpatialGrid, Vec3};
use super::model::{Electrode, RfDrive, TrapModel};
use crate::constants::{angular, Species};
use crate::error::{Error, Result};

/// Largest discrete Laplacian residual (relative to the largest second
/// derivative) accepted for a synthesized basis field.
pub const LAPLACIAN_TOL: f64 = 1e-2;

/// Potential at `r` of a unit-voltage rectangle lying in the plane `y = y_p`,
/// spanning `[x1, x2] x [z1, z2]`, with the rest of the plane grounded.
pub fn rectangle_potential(r: &Vec3, y_p: f64, x: (f64, f64), z: (f64, f64)) -> f64 {
    let h = (r.y - y_p).abs();
    let f = |xe: f64, ze: f64| {
        let (a, b) = (xe - r.x, ze - r.z);
        (a * b / (h * (a * a + b * b + h * h).sqrt())).atan()
    };
    (f(x.1, z.1) - f(x.0, z.1) - f(x.1, z.0) + f(x.0, z.0)) / (2.0 * PI)
}

/// Potential of a line source parallel to x at `(y0, z0)` between grounded
/// planes `y = +-w/2`. Decays as `exp(-pi |z - z0| / w)` along the channel.
pub fn channel_line_potential(y: f64, z: f64, y0: f64, z0: f64, w: f64) -> f64 {
    let (yy, yy0) = (y + 0.5 * w, y0 + 0.5 * w);
    let c = (PI * (z - z0) / w).cosh();
    ((c - (PI * (yy + yy0) / w).cos()) / (c - (PI * (yy - yy0) / w).cos())).ln()
}

/// Segmented two-layer linear trap.
///
/// Segments of the top row sit in the plane `y = +plane_height` over
/// `x in [channel_half_width, channel_half_width + electrode_length]`, the
/// bottom row mirrors them diagonally (`y < 0`, `x < 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTrapParams {
    pub plane_height: f64,
    pub channel_half_width: f64,
    pub electrode_length: f64,
    pub segment_pitch: f64,
    pub segment_gap: f64,
    pub n_segments: usize,
    pub z_first: f64,
    /// Curvature k (1/m^2) of the unit rf basis `k (x^2 - y^2) / 2`.
    pub quadrupole_k: f64,
    pub drive: RfDrive,
    pub species: Species,
}

impl Default for LinearTrapParams {
    fn default() -> Self {
        let drive = RfDrive {
            amplitude: 200.0,
            omega: angular(83e6),
        };
        let species = Species::beryllium9();
        LinearTrapParams {
            plane_height: 100e-6,
            channel_half_width: 60e-6,
            electrode_length: 1e-3,
            segment_pitch: 100e-6,
            segment_gap: 0.0,
            n_segments: 10,
            z_first: -650e-6,
            quadrupole_k: quadrupole_k_for(angular(10e6), drive, species),
            drive,
            species,
        }
    }
}

/// Quadrupole curvature that gives radial pseudopotential frequency `omega_rf`:
/// `omega_rf = q V_rf k / (sqrt(2) m Omega_rf)`.
pub fn quadrupole_k_for(omega_rf: f64, drive: RfDrive, species: Species) -> f64 {
    omega_rf * std::f64::consts::SQRT_2 * species.mass * drive.omega
        / (species.charge * drive.amplitude)
}

/// Radial pseudopotential frequency of a linear quadrupole of curvature `k`.
pub fn quadrupole_radial_frequency(k: f64, drive: RfDrive, species: Species) -> f64 {
    species.charge * drive.amplitude * k
        / (std::f64::consts::SQRT_2 * species.mass * drive.omega)
}

impl LinearTrapParams {
    fn validate(&self) -> Result<()> {
        if self.n_segments < 3 {
            return Err(Error::invalid(
                "at least 3 segments per row (6 electrodes) are needed",
            ));
        }
        let positive = [
            self.plane_height,
            self.channel_half_width,
            self.electrode_length,
            self.segment_pitch,
        ];
        if positive.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("trap dimensions must be positive"));
        }
        if !(self.segment_gap >= 0.0 && self.segment_gap < self.segment_pitch) {
            return Err(Error::invalid("segment gap must be in [0, pitch)"));
        }
        Ok(())
    }

    /// z extent `(start, end)` of segment `i`.
    pub fn segment_span(&self, i: usize) -> (f64, f64) {
        let z0 = self.z_first + i as f64 * self.segment_pitch + 0.5 * self.segment_gap;
        (z0, z0 + self.segment_pitch - self.segment_gap)
    }

    /// Centre z of segment `i`.
    pub fn segment_centre(&self, i: usize) -> f64 {
        let (a, b) = self.segment_span(i);
        0.5 * (a + b)
    }

    fn control_electrodes(&self, grid: &SpatialGrid) -> Result<Vec<Electrode>> {
        let (a, l, d) = (self.channel_half_width, self.electrode_length, self.plane_height);
        let mut out = Vec::with_capacity(2 * self.n_segments);
        for (row, y_p, xs) in [("T", d, (a, a + l)), ("B", -d, (-a - l, -a))] {
            for i in 0..self.n_segments {
                let zs = self.segment_span(i);
                let field = ScalarField::from_fn(grid.clone(), |r| {
                    rectangle_potential(r, y_p, xs, zs)
                })?;
                out.push(Electrode {
                    name: format!("{row}{i:02}"),
                    field,
                });
            }
        }
        Ok(out)
    }
}

fn check_harmonic(name: &str, field: &ScalarField) -> Result<()> {
    let res = field.laplacian_residual();
    if res > LAPLACIAN_TOL {
        return Err(Error::invalid(format!(
            "grid too coarse for basis {name}: relative Laplacian residual {res:.2e}"
        )));
    }
    Ok(())
}

fn assemble(
    electrodes: Vec<Electrode>,
    rf: ScalarField,
    drive: RfDrive,
    species: Species,
) -> Result<TrapModel> {
    for e in &electrodes {
        check_harmonic(&e.name, &e.field)?;
    }
    check_harmonic("rf", &rf)?;
    TrapModel::new(electrodes, rf, drive, species)
}

/// Grid around the trap axis spanning `z_lo..z_hi`, +-10 um transversely.
pub fn axis_grid(z_lo: f64, z_hi: f64, spacing: f64) -> Result<SpatialGrid> {
    SpatialGrid::covering(
        Vec3::new(-10e-6, -10e-6, z_lo),
        Vec3::new(10e-6, 10e-6, z_hi),
        spacing,
    )
}

/// Linear segmented trap with an ideal quadrupole rf basis.
pub fn synth_linear_trap(params: &LinearTrapParams, grid: &SpatialGrid) -> Result<TrapModel> {
    params.validate()?;
    let electrodes = params.control_electrodes(grid)?;
    let k = params.quadrupole_k;
    let rf = ScalarField::from_fn(grid.clone(), |r| 0.5 * k * (r.x * r.x - r.y * r.y))?;
    assemble(electrodes, rf, params.drive, params.species)
}

/// Linear trap plus rf bridges at `bridge_z` producing axial pseudopotential
/// barriers on either side of the junction centre.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionParams {
    pub trap: LinearTrapParams,
    /// Distance between the grounded channel walls.
    pub channel_width: f64,
    /// |y| of the two bridge sources.
    pub bridge_offset: f64,
    pub bridge_z: f64,
    /// Peak axial q * phi_ps, in eV (equivalently volts for a single charge).
    pub barrier_height: f64,
    /// 0 gives mirror-symmetric barriers; nonzero unbalances the bridges in
    /// strength and shifts them apart along z.
    pub asymmetry: f64,
}

impl Default for JunctionParams {
    fn default() -> Self {
        JunctionParams {
            trap: LinearTrapParams {
                z_first: -750e-6,
                n_segments: 11,
                ..LinearTrapParams::default()
            },
            channel_width: 400e-6,
            bridge_offset: 132e-6,
            bridge_z: 0.0,
            barrier_height: 0.3,
            asymmetry: 0.0,
        }
    }
}

impl JunctionParams {
    fn bridges(&self) -> [(f64, f64, f64); 2] {
        let eps = self.asymmetry;
        let dz = eps * self.bridge_offset;
        [
            (1.0 + eps, self.bridge_offset, self.bridge_z + dz),
            (1.0 - eps, -self.bridge_offset, self.bridge_z - dz),
        ]
    }

    /// Unscaled bridge potential.
    fn bridge_unit(&self, r: &Vec3) -> f64 {
        self.bridges()
            .iter()
            .map(|&(s, y0, z0)| s * channel_line_potential(r.y, r.z, y0, z0, self.channel_width))
            .sum()
    }

    /// Bridge scale giving the requested barrier height on axis.
    fn bridge_scale(&self) -> Result<f64> {
        let drive = self.trap.drive;
        if !(drive.amplitude > 0.0) {
            return Err(Error::invalid("a junction needs a positive rf amplitude"));
        }
        if !(self.barrier_height > 0.0) {
            return Err(Error::invalid("barrier height must be positive"));
        }
        if !(self.bridge_offset < 0.5 * self.channel_width) {
            return Err(Error::invalid("bridges must lie inside the channel"));
        }
        let h = 1e-9;
        let span = 3.0 * self.channel_width;
        let n = 6000;
        let mut peak: f64 = 0.0;
        for i in 0..=n {
            let z = self.bridge_z - span + 2.0 * span * i as f64 / n as f64;
            let at = |dy: f64, dz: f64| self.bridge_unit(&Vec3::new(0.0, dy, z + dz));
            let gy = (at(h, 0.0) - at(-h, 0.0)) / (2.0 * h);
            let gz = (at(0.0, h) - at(0.0, -h)) / (2.0 * h);
            peak = peak.max(gy * gy + gz * gz);
        }
        let sp = self.trap.species;
        let pre = sp.charge / (4.0 * sp.mass * drive.omega * drive.omega);
        Ok((self.barrier_height / (pre * drive.amplitude * drive.amplitude * peak)).sqrt())
    }
}

pub fn synth_junction_trap(params: &JunctionParams, grid: &SpatialGrid) -> Result<TrapModel> {
    params.trap.validate()?;
    let electrodes = params.trap.control_electrodes(grid)?;
    let k = params.trap.quadrupole_k;
    let b = params.bridge_scale()?;
    let rf = ScalarField::from_fn(grid.clone(), |r| {
        0.5 * k * (r.x * r.x - r.y * r.y) + b * params.bridge_unit(r)
    })?;
    assemble(electrodes, rf, params.trap.drive, params.trap.species)
}

/// Trap whose basis functions are low-order polynomials, reproduced exactly by
/// the grid derivatives: three uniform fields `ex, ey, ez` (1 V gives
/// 1e4 V/m), an axial quadratic `(z^2 - (x^2 + y^2)/2) / L^2` with
/// L = 100 um, and a quadrupole rf basis.
pub fn synth_harmonic_trap(
    grid: &SpatialGrid,
    quadrupole_k: f64,
    drive: RfDrive,
    species: Species,
) -> Result<TrapModel> {
    const L: f64 = 100e-6;
    let basis: [(&str, fn(&Vec3) -> f64); 4] = [
        ("ex", |r| r.x / L),
        ("ey", |r| r.y / L),
        ("ez", |r| r.z / L),
        ("axial", |r| (r.z * r.z - 0.5 * (r.x * r.x + r.y * r.y)) / (L * L)),
    ];
    let electrodes = basis
        .iter()
        .map(|(name, f)| {
            Ok(Electrode {
                name: name.to_string(),
                field: ScalarField::from_fn(grid.clone(), f)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rf = ScalarField::from_fn(grid.clone(), |r| {
        0.5 * quadrupole_k * (r.x * r.x - r.y * r.y)
    })?;
    TrapModel::new(electrodes, rf, drive, species)
}

/// Curvature of the `axial` electrode of [`synth_harmonic_trap`] per volt.
pub const HARMONIC_AXIAL_CURVATURE: f64 = 2.0 / (100e-6 * 100e-6);
/// Field of the uniform electrodes of [`synth_harmonic_trap`] per volt.
pub const HARMONIC_UNIFORM_FIELD: f64 = 1.0 / 100e-6;
