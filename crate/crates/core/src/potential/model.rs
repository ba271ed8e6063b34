use nalgebra::{Matrix3, SymmetricEigen};

use super::grid::{FieldSample, HermiteNode, ScalarField, SpatialGrid, Stencil, Vec3};
use crate::constants::Species;
use crate::error::{Error, Result};

/// Peak rf amplitude (V) and drive angular frequency (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfDrive {
    pub amplitude: f64,
    pub omega: f64,
}

#[derive(Debug, Clone)]
pub struct Electrode {
    pub name: String,
    pub field: ScalarField,
}

/// Hermite nodal data of several fields, interleaved per node so one stencil
/// serves every field.
#[derive(Debug, Clone)]
struct FieldStack {
    nfields: usize,
    data: Vec<HermiteNode>,
}

impl FieldStack {
    fn build(fields: &[&ScalarField]) -> Self {
        let nf = fields.len();
        let n = fields[0].grid.len();
        let mut data = vec![[0.0; 8]; n * nf];
        for (f, field) in fields.iter().enumerate() {
            for (node, d) in field.hermite_data().into_iter().enumerate() {
                data[node * nf + f] = d;
            }
        }
        FieldStack { nfields: nf, data }
    }

    /// Corner data of `sum_f weights[f] * field_f`.
    fn combine(&self, st: &Stencil, weights: &[f64]) -> [HermiteNode; 8] {
        let mut out = [[0.0; 8]; 8];
        for (c, corner) in out.iter_mut().enumerate() {
            let base = st.nodes[c] * self.nfields;
            for (f, &wf) in weights.iter().enumerate() {
                if wf == 0.0 {
                    continue;
                }
                let d = &self.data[base + f];
                for k in 0..8 {
                    corner[k] += wf * d[k];
                }
            }
        }
        out
    }

    fn corners(&self, st: &Stencil, f: usize) -> [HermiteNode; 8] {
        st.nodes.map(|n| self.data[n * self.nfields + f])
    }

    fn sample(&self, st: &Stencil, f: usize) -> FieldSample {
        st.sample(&self.corners(st, f))
    }

    fn sample_weighted(&self, st: &Stencil, weights: &[f64]) -> FieldSample {
        st.sample(&self.combine(st, weights))
    }

    /// Control gradient for voltages `v` (slots `1..=N`), plus the
    /// pseudopotential and rf-basis gradients, from one stencil.
    fn gradient_parts(&self, st: &Stencil, v: &[f64]) -> [Vec3; 3] {
        let mut control = [[0.0; 8]; 8];
        for (c, corner) in control.iter_mut().enumerate() {
            let base = st.nodes[c] * self.nfields + 1;
            for (n, &vn) in v.iter().enumerate() {
                let d = &self.data[base + n];
                for k in 0..8 {
                    corner[k] += vn * d[k];
                }
            }
        }
        [
            st.gradient(&control),
            st.gradient(&self.corners(st, 0)),
            st.gradient(&self.corners(st, v.len() + 1)),
        ]
    }
}

/// Electrode basis potentials, rf basis and drive, and the trapped species.
///
/// Field slot 0 of the internal stack holds the pseudopotential, slots
/// `1..=N` the control electrodes and slot `N + 1` the rf basis.
#[derive(Debug, Clone)]
pub struct TrapModel {
    electrodes: Vec<Electrode>,
    rf_basis: ScalarField,
    drive: RfDrive,
    species: Species,
    stack: FieldStack,
}

impl TrapModel {
    pub fn new(
        electrodes: Vec<Electrode>,
        rf_basis: ScalarField,
        drive: RfDrive,
        species: Species,
    ) -> Result<Self> {
        if electrodes.is_empty() {
            return Err(Error::invalid("a trap model needs at least one electrode"));
        }
        // A zero rf amplitude is accepted so single electrode fields can be
        // probed without a pseudopotential.
        if !(drive.amplitude >= 0.0 && drive.amplitude.is_finite()) {
            return Err(Error::invalid("rf amplitude must be non-negative"));
        }
        if !(drive.omega > 0.0 && drive.omega.is_finite()) {
            return Err(Error::invalid("rf drive frequency must be positive"));
        }
        if !(species.charge > 0.0 && species.mass > 0.0) {
            return Err(Error::invalid("species charge and mass must be positive"));
        }
        for e in &electrodes {
            if e.field.grid != rf_basis.grid {
                return Err(Error::invalid(format!(
                    "electrode {} does not share the rf basis grid",
                    e.name
                )));
            }
        }
        let pseudo = pseudo_field(&rf_basis, drive, species);
        let mut fields: Vec<&ScalarField> = Vec::with_capacity(electrodes.len() + 2);
        fields.push(&pseudo);
        fields.extend(electrodes.iter().map(|e| &e.field));
        fields.push(&rf_basis);
        let stack = FieldStack::build(&fields);
        Ok(TrapModel {
            electrodes,
            rf_basis,
            drive,
            species,
            stack,
        })
    }

    /// Same electrodes and rf basis with a different drive.
    pub fn with_drive(&self, drive: RfDrive) -> Result<Self> {
        TrapModel::new(
            self.electrodes.clone(),
            self.rf_basis.clone(),
            drive,
            self.species,
        )
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.rf_basis.grid
    }

    pub fn electrodes(&self) -> &[Electrode] {
        &self.electrodes
    }

    pub fn n_electrodes(&self) -> usize {
        self.electrodes.len()
    }

    pub fn rf_basis(&self) -> &ScalarField {
        &self.rf_basis
    }

    pub fn drive(&self) -> RfDrive {
        self.drive
    }

    pub fn species(&self) -> Species {
        self.species
    }

    /// Number of stacked fields: pseudopotential, electrodes, rf basis.
    pub(crate) fn n_fields(&self) -> usize {
        self.stack.nfields
    }

    pub(crate) fn rf_slot(&self) -> usize {
        self.electrodes.len() + 1
    }

    /// Prefactor q / (4 m Omega^2) of the pseudopotential, V / (V/m)^2.
    pub fn pseudo_prefactor(&self) -> f64 {
        let Species { charge, mass } = self.species;
        charge / (4.0 * mass * self.drive.omega * self.drive.omega)
    }

    /// Pseudopotential (as an electric potential, volts) at `r`.
    pub fn pseudopotential(&self, r: &Vec3) -> Result<f64> {
        Ok(self.pseudo_sample(r)?.value)
    }

    pub fn pseudo_sample(&self, r: &Vec3) -> Result<FieldSample> {
        let st = self.grid().locate(r)?;
        Ok(symmetrized(self.stack.sample(&st, 0)))
    }

    /// Sample of electrode `n` (zero-based) at unit voltage.
    pub fn electrode_sample(&self, n: usize, r: &Vec3) -> Result<FieldSample> {
        if n >= self.n_electrodes() {
            return Err(Error::invalid(format!("no electrode with index {n}")));
        }
        let st = self.grid().locate(r)?;
        Ok(symmetrized(self.stack.sample(&st, n + 1)))
    }

    /// Sample of the rf basis (unit rf amplitude).
    pub fn rf_sample(&self, r: &Vec3) -> Result<FieldSample> {
        let st = self.grid().locate(r)?;
        Ok(symmetrized(self.stack.sample(&st, self.rf_slot())))
    }

    /// Squared rf field amplitude E_0^2 = |V_rf grad phi_rf|^2, (V/m)^2.
    pub fn rf_field_squared(&self, r: &Vec3) -> Result<f64> {
        let g = self.rf_sample(r)?.gradient * self.drive.amplitude;
        Ok(g.norm_squared())
    }

    /// Samples of the pseudopotential followed by every electrode, the columns
    /// of the constraint design matrix.
    pub fn basis_samples(&self, r: &Vec3) -> Result<Vec<FieldSample>> {
        let st = self.grid().locate(r)?;
        Ok((0..=self.n_electrodes())
            .map(|f| symmetrized(self.stack.sample(&st, f)))
            .collect())
    }

    fn check_voltages(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_electrodes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_electrodes(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Stack weights `[1, V_1 .. V_N, 0]` for a voltage vector.
    pub(crate) fn weights(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_voltages(v)?;
        let mut w = Vec::with_capacity(self.n_fields());
        w.push(1.0);
        w.extend_from_slice(v);
        w.push(0.0);
        Ok(w)
    }

    /// Pseudopotential plus the control potential for voltages `v`.
    pub fn total_potential(&self, v: &[f64], r: &Vec3) -> Result<FieldSample> {
        let w = self.weights(v)?;
        self.sample_weighted(&w, r)
    }

    /// Arbitrary combination of the stacked fields.
    pub(crate) fn sample_weighted(&self, weights: &[f64], r: &Vec3) -> Result<FieldSample> {
        debug_assert_eq!(weights.len(), self.n_fields());
        let st = self.grid().locate(r)?;
        Ok(symmetrized(self.stack.sample_weighted(&st, weights)))
    }

    /// `[sum_n V_n grad phi_n, grad phi_ps, grad phi_rf]` at `r`; the hot path
    /// of the dynamics integrator, which applies time-dependent factors to the
    /// last two.
    pub fn gradient_parts(&self, v: &[f64], r: &Vec3) -> Result<[Vec3; 3]> {
        debug_assert_eq!(v.len(), self.n_electrodes());
        let st = self.grid().locate(r)?;
        Ok(self.stack.gradient_parts(&st, v))
    }

    /// Normal modes of the total potential at `r0`.
    pub fn modes_at(&self, v: &[f64], r0: &Vec3) -> Result<ModeSolution> {
        let s = self.total_potential(v, r0)?;
        Ok(ModeSolution::from_hessian(&s.hessian, self.species))
    }

    /// Stationary point of the total potential near `guess`, by Newton
    /// iteration on the sampled gradient and Hessian.
    pub fn find_minimum(&self, v: &[f64], guess: &Vec3) -> Result<Vec3> {
        let w = self.weights(v)?;
        self.stationary_point(&w, guess)
    }

    pub(crate) fn stationary_point(&self, weights: &[f64], guess: &Vec3) -> Result<Vec3> {
        let max_step = 2.0 * self.grid().spacing.max();
        let mut r = *guess;
        for _ in 0..200 {
            let s = self.sample_weighted(weights, &r)?;
            let Some(inv) = s.hessian.try_inverse() else {
                return Err(Error::invalid("singular Hessian while locating minimum"));
            };
            let mut step = -(inv * s.gradient);
            let len = step.norm();
            if len > max_step {
                step *= max_step / len;
            }
            r += step;
            if len < 1e-13 {
                self.grid().locate(&r)?;
                return Ok(r);
            }
        }
        Err(Error::NoConvergence { iterations: 200 })
    }
}

fn pseudo_field(rf: &ScalarField, drive: RfDrive, species: Species) -> ScalarField {
    let pre = species.charge / (4.0 * species.mass * drive.omega * drive.omega);
    let d = rf.derivatives();
    let scale = pre * drive.amplitude * drive.amplitude;
    let values = (0..rf.grid.len())
        .map(|i| scale * (d.grad[0][i].powi(2) + d.grad[1][i].powi(2) + d.grad[2][i].powi(2)))
        .collect();
    ScalarField {
        grid: rf.grid.clone(),
        values,
    }
}

fn symmetrized(mut s: FieldSample) -> FieldSample {
    s.hessian = (s.hessian + s.hessian.transpose()) * 0.5;
    s
}

/// Eigen-decomposition of a potential curvature into secular modes.
///
/// `lambdas` are the eigenvalues of `q * H` (J/m^2), ascending, and the
/// frequencies are `sqrt(|lambda| / m)` with `confined[i] == false` marking
/// anti-confining directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    pub lambdas: [f64; 3],
    pub frequencies: [f64; 3],
    pub confined: [bool; 3],
    pub axes: [Vec3; 3],
    pub degenerate: bool,
}

/// Relative eigenvalue gap below which two modes count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-3;

impl ModeSolution {
    pub fn from_hessian(h: &Matrix3<f64>, species: Species) -> Self {
        let eig = SymmetricEigen::new((h + h.transpose()) * 0.5);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut lambdas = [0.0; 3];
        let mut frequencies = [0.0; 3];
        let mut confined = [false; 3];
        let mut axes = [Vec3::zeros(); 3];
        for (slot, &i) in order.iter().enumerate() {
            let lambda = species.charge * eig.eigenvalues[i];
            lambdas[slot] = lambda;
            frequencies[slot] = (lambda.abs() / species.mass).sqrt();
            confined[slot] = lambda > 0.0;
            axes[slot] = eig.eigenvectors.column(i).into_owned().normalize();
        }
        let scale = lambdas.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let degenerate = scale > 0.0
            && (lambdas[1] - lambdas[0] < DEGENERACY_TOL * scale
                || lambdas[2] - lambdas[1] < DEGENERACY_TOL * scale);
        ModeSolution {
            lambdas,
            frequencies,
            confined,
            axes,
            degenerate,
        }
    }

    /// omega^2 with the sign of the curvature, (rad/s)^2.
    pub fn signed_omega_sq(&self, i: usize) -> f64 {
        let w2 = self.frequencies[i] * self.frequencies[i];
        if self.confined[i] {
            w2
        } else {
            -w2
        }
    }

    /// Index of the mode whose axis is most nearly parallel to `dir`.
    pub fn closest_to(&self, dir: &Vec3) -> usize {
        let d = dir.normalize();
        (0..3)
            .max_by(|&a, &b| {
                self.axes[a]
                    .dot(&d)
                    .abs()
                    .total_cmp(&self.axes[b].dot(&d).abs())
            })
            .unwrap_or(0)
    }

    /// Signed frequency of the mode along `dir`: negative when anti-confined.
    pub fn frequency_along(&self, dir: &Vec3) -> f64 {
        let i = self.closest_to(dir);
        if self.confined[i] {
            self.frequencies[i]
        } else {
            -self.frequencies[i]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::angular;

    fn grid() -> SpatialGrid {
        SpatialGrid::covering(
            Vec3::new(-20e-6, -20e-6, -20e-6),
            Vec3::new(20e-6, 20e-6, 20e-6),
            5e-6,
        )
        .unwrap()
    }

    fn harmonic(wx: f64, wy: f64, wz: f64) -> TrapModel {
        let sp = Species::beryllium9();
        let (kx, ky, kz) = (sp.curvature_for(wx), sp.curvature_for(wy), sp.curvature_for(wz));
        let g = grid();
        let well = ScalarField::from_fn(g.clone(), |r| {
            0.5 * (kx * r.x * r.x + ky * r.y * r.y + kz * r.z * r.z)
        })
        .unwrap();
        let tilt = ScalarField::from_fn(g.clone(), |r| r.z * 1e3).unwrap();
        TrapModel::new(
            vec![
                Electrode {
                    name: "well".into(),
                    field: well,
                },
                Electrode {
                    name: "tilt".into(),
                    field: tilt,
                },
            ],
            ScalarField::zeros(g),
            RfDrive {
                amplitude: 0.0,
                omega: angular(80e6),
            },
            sp,
        )
        .unwrap()
    }

    #[test]
    fn harmonic_well_frequencies_recovered() {
        let (wx, wy, wz) = (angular(5e6), angular(7e6), angular(3e6));
        let m = harmonic(wx, wy, wz);
        let modes = m.modes_at(&[1.0, 0.0], &Vec3::new(3e-6, -2e-6, 1e-6)).unwrap();
        let want = [wz, wx, wy];
        for i in 0..3 {
            assert!((modes.frequencies[i] / want[i] - 1.0).abs() < 1e-3);
            assert!(modes.confined[i]);
        }
        assert!((modes.axes[0].z.abs() - 1.0).abs() < 1e-9);
        assert!(!modes.degenerate);
    }

    #[test]
    fn minimum_follows_tilt() {
        let w = angular(3e6);
        let m = harmonic(angular(5e6), angular(7e6), w);
        let kz = Species::beryllium9().curvature_for(w);
        let v = 0.2;
        let r = m.find_minimum(&[1.0, v], &Vec3::zeros()).unwrap();
        // kz z + 1e3 v = 0
        assert!((r.z + 1e3 * v / kz).abs() < 1e-12);
    }

    #[test]
    fn wrong_voltage_length_rejected() {
        let m = harmonic(1e7, 1e7, 1e7);
        assert!(matches!(
            m.total_potential(&[1.0], &Vec3::zeros()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn uniform_rf_gives_zero_pseudopotential() {
        let g = grid();
        let rf = ScalarField::from_fn(g.clone(), |_| 3.0).unwrap();
        let m = TrapModel::new(
            vec![Electrode {
                name: "a".into(),
                field: ScalarField::zeros(g),
            }],
            rf,
            RfDrive {
                amplitude: 200.0,
                omega: angular(83e6),
            },
            Species::beryllium9(),
        )
        .unwrap();
        assert_eq!(m.pseudopotential(&Vec3::new(1e-6, 2e-6, 3e-6)).unwrap(), 0.0);
    }
}
