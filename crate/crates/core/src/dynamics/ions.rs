use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};

use crate::constants::{Species, COULOMB_K, HBAR};
use crate::error::{Error, Result};
use crate::potential::{TrapModel, Vec3};

/// Positions (m) and velocities (m/s) of one or two ions.
#[derive(Debug, Clone, PartialEq)]
pub struct IonState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
}

impl IonState {
    pub fn at_rest(positions: Vec<Vec3>) -> Self {
        let velocities = vec![Vec3::zeros(); positions.len()];
        IonState {
            positions,
            velocities,
        }
    }

    pub fn n_ions(&self) -> usize {
        self.positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if n == 0 || n > 2 || self.velocities.len() != n {
            return Err(Error::invalid("simulation supports one or two ions"));
        }
        let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
        if !self.positions.iter().chain(&self.velocities).all(finite) {
            return Err(Error::invalid("ion state is not finite"));
        }
        if n == 2 && (self.positions[0] - self.positions[1]).norm() == 0.0 {
            return Err(Error::invalid("two ions at the same position"));
        }
        Ok(())
    }

    /// One ion at rest at the minimum of `v` nearest `guess`.
    pub fn single_at_minimum(model: &TrapModel, v: &[f64], guess: &Vec3) -> Result<Self> {
        Ok(IonState::at_rest(vec![model.find_minimum(v, guess)?]))
    }

    /// Two ions at rest in their equilibrium around `centre`, starting the
    /// search along `axis` at the separation of a harmonic well of the local
    /// curvature.
    pub fn pair_at_equilibrium(model: &TrapModel, v: &[f64], centre: &Vec3, axis: &Vec3) -> Result<Self> {
        let sp = model.species();
        let modes = model.modes_at(v, centre)?;
        let i = modes.closest_to(axis);
        if !modes.confined[i] {
            return Err(Error::invalid("well is not confining along the pair axis"));
        }
        let w = modes.frequencies[i];
        let d = (2.0 * COULOMB_K * sp.charge * sp.charge / (sp.mass * w * w)).cbrt();
        let u = axis.normalize() * (0.5 * d);
        let eq = equilibrium(model, v, &[centre - u, centre + u])?;
        Ok(IonState::at_rest(eq))
    }
}

/// Gradient (N) and Hessian (N/m) of the total energy of the ions.
fn energy_derivatives(model: &TrapModel, v: &[f64], r: &[Vec3]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = r.len();
    let q = model.species().charge;
    let mut g = DVector::zeros(3 * n);
    let mut h = DMatrix::zeros(3 * n, 3 * n);
    for (i, ri) in r.iter().enumerate() {
        let s = model.total_potential(v, ri)?;
        g.fixed_rows_mut::<3>(3 * i).copy_from(&(s.gradient * q));
        h.fixed_view_mut::<3, 3>(3 * i, 3 * i).copy_from(&(s.hessian * q));
    }
    if n == 2 {
        let kq2 = COULOMB_K * q * q;
        let d = r[0] - r[1];
        let dist = d.norm();
        let f = d * (kq2 / dist.powi(3));
        // U = k q^2 / |d|: dU/dr0 = -f, dU/dr1 = +f.
        let mut g0 = g.fixed_rows_mut::<3>(0);
        g0 -= &f;
        let mut g1 = g.fixed_rows_mut::<3>(3);
        g1 += &f;
        let c = (d * d.transpose() * 3.0 - Matrix3::identity() * dist * dist) * (kq2 / dist.powi(5));
        for (a, b, sign) in [(0, 0, 1.0), (3, 3, 1.0), (0, 3, -1.0), (3, 0, -1.0)] {
            let mut blk = h.fixed_view_mut::<3, 3>(a, b);
            blk += &c * sign;
        }
    }
    Ok((g, h))
}

/// Equilibrium positions of the ions in the potential of `v`, by Newton
/// iteration on the total energy.
pub fn equilibrium(model: &TrapModel, v: &[f64], guess: &[Vec3]) -> Result<Vec<Vec3>> {
    let max_step = 2.0 * model.grid().spacing.max();
    let mut r = guess.to_vec();
    for _ in 0..200 {
        let (g, h) = energy_derivatives(model, v, &r)?;
        let step = h
            .lu()
            .solve(&(-g))
            .ok_or_else(|| Error::invalid("singular Hessian while locating equilibrium"))?;
        let len = step.amax();
        let scale = if len > max_step { max_step / len } else { 1.0 };
        for (i, ri) in r.iter_mut().enumerate() {
            *ri += step.fixed_rows::<3>(3 * i) * scale;
        }
        if len < 1e-13 {
            return Ok(r);
        }
    }
    Err(Error::NoConvergence { iterations: 200 })
}

/// One normal mode of the ion crystal.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMode {
    /// `x`, `y`, `z` for one ion; `com_z`, `str_x`, ... for two.
    pub label: String,
    /// Eigenvalue of the mass-scaled Hessian, omega^2 with sign, (rad/s)^2.
    pub omega_sq: f64,
    /// Unit eigenvector over the 3N coordinates.
    pub vector: DVector<f64>,
}

impl NormalMode {
    pub fn omega(&self) -> f64 {
        self.omega_sq.abs().sqrt()
    }

    pub fn confined(&self) -> bool {
        self.omega_sq > 0.0
    }
}

/// Equilibrium and normal modes of the ions in a static potential.
#[derive(Debug, Clone, PartialEq)]
pub struct Crystal {
    pub species: Species,
    pub equilibrium: Vec<Vec3>,
    pub modes: Vec<NormalMode>,
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn dominant(u: &Vec3) -> usize {
    (0..3).max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs())).unwrap_or(0)
}

fn label(e: &DVector<f64>) -> String {
    if e.len() == 3 {
        return AXES[dominant(&Vec3::new(e[0], e[1], e[2]))].to_string();
    }
    let u0 = Vec3::new(e[0], e[1], e[2]);
    let u1 = Vec3::new(e[3], e[4], e[5]);
    let (sum, diff) = (u0 + u1, u0 - u1);
    if sum.norm() >= diff.norm() {
        format!("com_{}", AXES[dominant(&sum)])
    } else {
        format!("str_{}", AXES[dominant(&diff)])
    }
}

impl Crystal {
    pub fn new(model: &TrapModel, v: &[f64], guess: &[Vec3]) -> Result<Self> {
        let species = model.species();
        let eq = equilibrium(model, v, guess)?;
        let (_, h) = energy_derivatives(model, v, &eq)?;
        let eig = SymmetricEigen::new(h / species.mass);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let modes = order
            .into_iter()
            .map(|k| {
                let vector = eig.eigenvectors.column(k).normalize();
                NormalMode {
                    label: label(&vector),
                    omega_sq: eig.eigenvalues[k],
                    vector,
                }
            })
            .collect();
        Ok(Crystal {
            species,
            equilibrium: eq,
            modes,
        })
    }

    pub fn n_ions(&self) -> usize {
        self.equilibrium.len()
    }

    pub fn all_confined(&self) -> bool {
        self.modes.iter().all(NormalMode::confined)
    }

    pub fn max_omega(&self) -> f64 {
        self.modes.iter().map(NormalMode::omega).fold(0.0, f64::max)
    }

    pub fn min_omega(&self) -> f64 {
        self.modes.iter().map(NormalMode::omega).fold(f64::INFINITY, f64::min)
    }

    pub fn mode(&self, label: &str) -> Option<&NormalMode> {
        self.modes.iter().find(|m| m.label == label)
    }

    /// Harmonic energy (J) in each mode for the given state.
    pub fn energies(&self, state: &IonState) -> Vec<f64> {
        self.step_energies(state, 0.0)
    }

    /// Mode energies as conserved by velocity Verlet with step `h`: the
    /// potential term carries the factor `1 - (omega h / 2)^2`. `h = 0` gives
    /// the plain harmonic energy.
    pub fn step_energies(&self, state: &IonState, h: f64) -> Vec<f64> {
        let n = self.n_ions();
        let mut dx = DVector::zeros(3 * n);
        let mut vv = DVector::zeros(3 * n);
        for i in 0..n {
            dx.fixed_rows_mut::<3>(3 * i)
                .copy_from(&(state.positions[i] - self.equilibrium[i]));
            vv.fixed_rows_mut::<3>(3 * i).copy_from(&state.velocities[i]);
        }
        let m = self.species.mass;
        self.modes
            .iter()
            .map(|mode| {
                let x = mode.vector.dot(&dx);
                let p = mode.vector.dot(&vv);
                let shadow = 1.0 - 0.25 * mode.omega_sq * h * h;
                0.5 * m * (p * p + mode.omega_sq * shadow * x * x)
            })
            .collect()
    }

    /// Energies in quanta, E / (hbar omega).
    pub fn quanta(&self, state: &IonState) -> Vec<f64> {
        self.energies(state)
            .iter()
            .zip(&self.modes)
            .map(|(e, m)| e / (HBAR * m.omega()))
            .collect()
    }
}

/// Axial COM and stretch frequencies of two ions in a harmonic well of axial
/// frequency `omega_z`: `(omega_z, sqrt(3) omega_z)`.
pub fn two_ion_modes(omega_z: f64) -> Result<(f64, f64)> {
    if !(omega_z > 0.0) {
        return Err(Error::invalid("axial frequency must be positive"));
    }
    Ok((omega_z, 3f64.sqrt() * omega_z))
}
