use nalgebra::{DMatrix, DVector, Matrix3};

use super::bvls::{bvls, Bound, RANK_TOL};
use crate::constants::Species;
use crate::error::{Error, Result};
use crate::potential::{FieldSample, TrapModel, Vec3};

/// One constraint row. Position rows force the gradient to zero, frequency
/// rows set a diagonal curvature, axis rows zero an off-diagonal curvature,
/// all expressed in the constraint frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Row {
    Gx,
    Gy,
    Gz,
    Hxx,
    Hyy,
    Hzz,
    Hxy,
    Hxz,
    Hyz,
}

impl Row {
    pub const ALL: [Row; 9] = [
        Row::Gx,
        Row::Gy,
        Row::Gz,
        Row::Hxx,
        Row::Hyy,
        Row::Hzz,
        Row::Hxy,
        Row::Hxz,
        Row::Hyz,
    ];

    /// Column of the 12-vector `[grad (3), Hessian row-major (9)]` picked by this row.
    pub fn column(self) -> usize {
        match self {
            Row::Gx => 0,
            Row::Gy => 1,
            Row::Gz => 2,
            Row::Hxx => 3,
            Row::Hyy => 7,
            Row::Hzz => 11,
            Row::Hxy => 4,
            Row::Hxz => 5,
            Row::Hyz => 8,
        }
    }

    pub fn is_position(self) -> bool {
        matches!(self, Row::Gx | Row::Gy | Row::Gz)
    }
}

/// What to impose at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub r0: Vec3,
    /// Rows are the unit vectors x', y', z' of the constraint frame.
    pub frame: Matrix3<f64>,
    /// Target secular frequencies along x', y', z' (rad/s).
    pub targets: [Option<f64>; 3],
    /// Activity of `Row::ALL[i]`; the three position rows are always used.
    pub active: [bool; 9],
}

impl ConstraintSpec {
    /// Only the potential minimum location.
    pub fn position_only(r0: Vec3) -> Self {
        ConstraintSpec {
            r0,
            frame: Matrix3::identity(),
            targets: [None; 3],
            active: [true, true, true, false, false, false, false, false, false],
        }
    }

    /// Minimum at `r0`, one principal axis along `axis`, frequency `omega`
    /// along it.
    pub fn along_axis(r0: Vec3, axis: &Vec3, omega: f64) -> Self {
        ConstraintSpec {
            r0,
            frame: frame_from_axis(axis),
            targets: [None, None, Some(omega)],
            active: [true, true, true, false, false, true, false, true, true],
        }
    }

    pub fn with_all_rows(mut self, targets: [f64; 3]) -> Self {
        self.targets = targets.map(Some);
        self.active = [true; 9];
        self
    }

    pub fn rows(&self) -> Vec<Row> {
        let mut rows: Vec<Row> = Row::ALL[..3].to_vec();
        rows.extend(
            Row::ALL[3..]
                .iter()
                .zip(&self.active[3..])
                .filter(|(_, a)| **a)
                .map(|(r, _)| *r),
        );
        rows
    }
}

/// Orthonormal frame whose third row is `axis`. The first row is chosen
/// closest to the lab x axis.
pub fn frame_from_axis(axis: &Vec3) -> Matrix3<f64> {
    let z = axis.normalize();
    let seed = if z.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let x = (seed - z * z.dot(&seed)).normalize();
    let y = z.cross(&x);
    Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
}

fn check_frame(frame: &Matrix3<f64>) -> Result<()> {
    let err = (frame * frame.transpose() - Matrix3::identity()).amax();
    if err > 1e-9 {
        return Err(Error::invalid(format!(
            "constraint frame not orthonormal (deviation {err:.2e})"
        )));
    }
    Ok(())
}

/// Smallest row norm used for scaling, relative to the largest row of its kind.
pub const ROW_NORM_FLOOR: f64 = 1e-6;

/// Rows of the linear system in the fixed-pseudopotential form
/// `design * [1; V] = c2`.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub rows: Vec<Row>,
    /// j x 12 selector.
    pub c1: DMatrix<f64>,
    pub c2: DVector<f64>,
    /// j x (N + 1); column 0 is the pseudopotential.
    pub design: DMatrix<f64>,
    /// Multiplier applied to each row after normalization, 1 by default.
    pub weights: DVector<f64>,
}

fn rotated_vector(s: &FieldSample, frame: &Matrix3<f64>) -> [f64; 12] {
    let g = frame * s.gradient;
    let h = frame * s.hessian * frame.transpose();
    let mut out = [0.0; 12];
    out[..3].copy_from_slice(g.as_slice());
    for i in 0..3 {
        for j in 0..3 {
            out[3 + 3 * i + j] = h[(i, j)];
        }
    }
    out
}

/// Build the system from samples of `[pseudo, electrode 1 .. N]` at `spec.r0`.
pub fn assemble_from_samples(
    spec: &ConstraintSpec,
    samples: &[FieldSample],
    species: Species,
) -> Result<ConstraintSystem> {
    check_frame(&spec.frame)?;
    let rows = spec.rows();
    let j = rows.len();
    let mut c1 = DMatrix::zeros(j, 12);
    let mut c2 = DVector::zeros(j);
    for (k, row) in rows.iter().enumerate() {
        c1[(k, row.column())] = 1.0;
        let axis = match row {
            Row::Hxx => Some(0),
            Row::Hyy => Some(1),
            Row::Hzz => Some(2),
            _ => None,
        };
        if let Some(a) = axis {
            let w = spec.targets[a].ok_or_else(|| {
                Error::invalid(format!("frequency row {row:?} is active without a target"))
            })?;
            c2[k] = species.curvature_for(w);
        }
    }
    let mut design = DMatrix::zeros(j, samples.len());
    for (col, s) in samples.iter().enumerate() {
        let v = rotated_vector(s, &spec.frame);
        for (k, row) in rows.iter().enumerate() {
            design[(k, col)] = v[row.column()];
        }
    }
    Ok(ConstraintSystem {
        weights: DVector::from_element(j, 1.0),
        rows,
        c1,
        c2,
        design,
    })
}

pub fn assemble(spec: &ConstraintSpec, model: &TrapModel) -> Result<ConstraintSystem> {
    let samples = model.basis_samples(&spec.r0)?;
    assemble_from_samples(spec, &samples, model.species())
}

impl ConstraintSystem {
    /// A system given directly by its design matrix (column 0 fixed at 1) and targets.
    pub fn from_parts(design: DMatrix<f64>, c2: DVector<f64>) -> Result<Self> {
        if design.nrows() != c2.len() || design.ncols() < 2 {
            return Err(Error::invalid("design needs matching rows and at least one free column"));
        }
        Ok(ConstraintSystem {
            rows: Vec::new(),
            c1: DMatrix::zeros(design.nrows(), 12),
            weights: DVector::from_element(c2.len(), 1.0),
            c2,
            design,
        })
    }

    /// Copy with the position rows weighted by `w`, making them effectively
    /// hard constraints for large `w`.
    pub fn with_position_weight(&self, w: f64) -> Self {
        let mut out = self.clone();
        for (k, row) in self.rows.iter().enumerate() {
            if row.is_position() {
                out.weights[k] = w;
            }
        }
        out
    }

    pub fn n_free(&self) -> usize {
        self.design.ncols() - 1
    }

    /// Free-column design and right-hand side with the fixed column moved
    /// across, each row divided by its free-column norm. Norms are floored at
    /// `ROW_NORM_FLOOR` of the largest row of the same kind (gradient or
    /// curvature), so rows the electrodes barely reach, such as cross
    /// curvatures of a symmetric basis, are not inflated from round-off.
    fn scaled(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.n_free();
        let mut a = self.design.columns(1, n).into_owned();
        let mut b = &self.c2 - self.design.column(0);
        let kind = |i: usize| self.rows.get(i).is_some_and(|r| r.is_position());
        let norms: Vec<f64> = (0..a.nrows()).map(|i| a.row(i).norm()).collect();
        let group_max = |k: bool| {
            (0..a.nrows())
                .filter(|&i| kind(i) == k)
                .map(|i| norms[i])
                .fold(0.0, f64::max)
        };
        let floors = [group_max(false) * ROW_NORM_FLOOR, group_max(true) * ROW_NORM_FLOOR];
        for i in 0..a.nrows() {
            let norm = norms[i].max(floors[kind(i) as usize]);
            let s = if norm > 0.0 { self.weights[i] / norm } else { self.weights[i] };
            a.row_mut(i).scale_mut(s);
            b[i] *= s;
        }
        (a, b)
    }

    /// Unscaled `design * [1; v] - c2`, one entry per row.
    pub fn row_residuals(&self, v: &[f64]) -> DVector<f64> {
        let mut full = DVector::zeros(v.len() + 1);
        full[0] = 1.0;
        full.rows_mut(1, v.len()).copy_from_slice(v);
        &self.design * full - &self.c2
    }

    /// Row-normalized residual 2-norm.
    pub fn scaled_residual(&self, v: &[f64]) -> f64 {
        let (a, b) = self.scaled();
        (a * DVector::from_column_slice(v) - b).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub v_max: f64,
    /// Largest per-step voltage change relative to the previous solution; may be infinite.
    pub alpha: f64,
    /// Gradient residual (V/m) above which a position row counts as unmet.
    pub residual_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            v_max: 10.0,
            alpha: 0.5,
            residual_tol: 1.0,
            max_iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoltageSolution {
    pub v: Vec<f64>,
    /// Row-normalized residual 2-norm.
    pub residual: f64,
    /// Unscaled residual of each constraint row.
    pub row_residuals: Vec<f64>,
    /// Indices of voltages sitting on a bound, with the side.
    pub active_set: Vec<(usize, Bound)>,
    pub nullspace_dim: usize,
}

impl VoltageSolution {
    /// Largest unscaled residual among the position rows, V/m.
    pub fn position_residual(&self, rows: &[Row]) -> f64 {
        rows.iter()
            .zip(&self.row_residuals)
            .filter(|(r, _)| r.is_position())
            .fold(0.0, |m, (_, e)| m.max(e.abs()))
    }
}

/// Bounded least-squares voltages for `system`. With `prev`, each voltage is
/// also kept within `opts.alpha` of its previous value.
pub fn solve(
    system: &ConstraintSystem,
    opts: &SolverOptions,
    prev: Option<&[f64]>,
) -> Result<VoltageSolution> {
    if !(opts.v_max > 0.0) || !(opts.alpha > 0.0) {
        return Err(Error::invalid("v_max and alpha must be positive"));
    }
    let n = system.n_free();
    let mut lo = vec![-opts.v_max; n];
    let mut hi = vec![opts.v_max; n];
    if let Some(p) = prev {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.len(),
            });
        }
        if opts.alpha.is_finite() {
            for i in 0..n {
                lo[i] = lo[i].max(p[i] - opts.alpha);
                hi[i] = hi[i].min(p[i] + opts.alpha);
                if lo[i] > hi[i] {
                    // Previous voltage outside the box: move as far toward it
                    // as the slew allows.
                    let edge = p[i].clamp(-opts.v_max, opts.v_max);
                    lo[i] = edge;
                    hi[i] = edge;
                }
            }
        }
    }
    let (a, b) = system.scaled();
    let sol = bvls(&a, &b, &lo, &hi, opts.max_iterations)?;
    let v: Vec<f64> = sol.x.iter().copied().collect();
    let residual = (&a * &sol.x - &b).norm();
    let row_residuals = system.row_residuals(&v).iter().copied().collect();
    let active_set = sol
        .state
        .iter()
        .enumerate()
        .filter(|(_, s)| **s != Bound::Free)
        .map(|(i, s)| (i, *s))
        .collect();
    Ok(VoltageSolution {
        v,
        residual,
        row_residuals,
        active_set,
        nullspace_dim: n - rank(&a),
    })
}

fn rank(a: &DMatrix<f64>) -> usize {
    let sv = a.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Orthonormal basis (columns) of the kernel of the free design columns.
/// Adding any combination leaves every row residual unchanged.
pub fn nullspace(system: &ConstraintSystem) -> DMatrix<f64> {
    let (a, _) = system.scaled();
    let n = a.ncols();
    // Pad to at least n rows so the thin SVD returns a full right basis.
    let mut padded = DMatrix::zeros(a.nrows().max(n), n);
    padded.rows_mut(0, a.nrows()).copy_from(&a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..n)
        .filter(|&i| smax == 0.0 || svd.singular_values[i] <= RANK_TOL * smax)
        .collect();
    let mut basis = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &vt.row(i).transpose());
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_frame_selector_rows() {
        let spec = ConstraintSpec::position_only(Vec3::zeros()).with_all_rows([1e7; 3]);
        let samples = vec![FieldSample::zero(); 3];
        let sys = assemble_from_samples(&spec, &samples, Species::beryllium9()).unwrap();
        let cols: Vec<usize> = (0..9)
            .map(|k| (0..12).find(|&c| sys.c1[(k, c)] == 1.0).unwrap())
            .collect();
        assert_eq!(cols, vec![0, 1, 2, 3, 7, 11, 4, 5, 8]);
        assert_eq!(sys.c1.sum(), 9.0);
        let k = Species::beryllium9().curvature_for(1e7);
        assert_eq!(sys.c2.as_slice(), &[0.0, 0.0, 0.0, k, k, k, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn position_only_has_zero_targets() {
        let spec = ConstraintSpec::position_only(Vec3::zeros());
        let sys =
            assemble_from_samples(&spec, &vec![FieldSample::zero(); 4], Species::beryllium9())
                .unwrap();
        assert_eq!(sys.design.nrows(), 3);
        assert!(sys.c2.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn missing_target_and_bad_frame_rejected() {
        let mut spec = ConstraintSpec::position_only(Vec3::zeros());
        spec.active[5] = true;
        let s = vec![FieldSample::zero(); 2];
        assert!(assemble_from_samples(&spec, &s, Species::beryllium9()).is_err());
        let mut spec = ConstraintSpec::position_only(Vec3::zeros());
        spec.frame[(0, 0)] = 2.0;
        assert!(assemble_from_samples(&spec, &s, Species::beryllium9()).is_err());
    }

    #[test]
    fn null_problem_gives_zero() {
        let sys = ConstraintSystem::from_parts(
            DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 2.0, 0.0, -1.0, 0.5]),
            DVector::zeros(2),
        )
        .unwrap();
        let s = solve(&sys, &SolverOptions::default(), None).unwrap();
        assert!(s.v.iter().all(|&v| v.abs() < 1e-15));
        assert!(s.residual < 1e-15);
    }

    #[test]
    fn slew_box_respected() {
        let sys = ConstraintSystem::from_parts(
            DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
            DVector::from_vec(vec![5.0, -5.0]),
        )
        .unwrap();
        let opts = SolverOptions::default();
        let s = solve(&sys, &opts, Some(&[0.0, 0.0])).unwrap();
        assert!((s.v[0] - 0.5).abs() < 1e-15 && (s.v[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn frame_from_axis_is_orthonormal() {
        let f = frame_from_axis(&Vec3::new(0.3, -0.2, 0.9));
        assert!((f * f.transpose() - Matrix3::identity()).amax() < 1e-14);
        assert!((f.row(2).transpose() - Vec3::new(0.3, -0.2, 0.9).normalize()).amax() < 1e-15);
    }
}
