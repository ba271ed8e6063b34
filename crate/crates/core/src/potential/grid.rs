use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Regular rectangular sampling grid, x-fastest node ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    pub origin: Vec3,
    pub spacing: Vec3,
    pub dims: [usize; 3],
}

/// Default node spacing, 5 um.
pub const DEFAULT_SPACING: f64 = 5e-6;

impl SpatialGrid {
    pub fn new(origin: Vec3, spacing: Vec3, dims: [usize; 3]) -> Result<Self> {
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("grid spacing must be positive and finite"));
        }
        if dims.iter().any(|&n| n < 4) {
            return Err(Error::invalid(format!(
                "grid dims {dims:?}: every axis needs at least 4 nodes"
            )));
        }
        if origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid origin must be finite"));
        }
        Ok(SpatialGrid {
            origin,
            spacing,
            dims,
        })
    }

    /// Smallest grid with uniform `spacing` whose usable interior covers the box
    /// `[lo, hi]`.  One extra node is added on each side since positions within
    /// one cell of the edge cannot be sampled.
    pub fn covering(lo: Vec3, hi: Vec3, spacing: f64) -> Result<Self> {
        let mut dims = [0usize; 3];
        let mut origin = Vec3::zeros();
        for a in 0..3 {
            if hi[a] < lo[a] {
                return Err(Error::invalid("covering box has hi < lo"));
            }
            let cells = ((hi[a] - lo[a]) / spacing - 1e-9).ceil().max(1.0) as usize;
            dims[a] = (cells + 3).max(4);
            let span = (dims[a] - 3) as f64 * spacing;
            let centre = 0.5 * (lo[a] + hi[a]);
            origin[a] = centre - 0.5 * span - spacing;
        }
        SpatialGrid::new(origin, Vec3::repeat(spacing), dims)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            self.origin.x + i as f64 * self.spacing.x,
            self.origin.y + j as f64 * self.spacing.y,
            self.origin.z + k as f64 * self.spacing.z,
        )
    }

    /// Lower and upper corners of the region where sampling is allowed.
    pub fn interior_bounds(&self) -> (Vec3, Vec3) {
        let lo = self.origin + self.spacing;
        let hi = Vec3::new(
            self.origin.x + (self.dims[0] - 2) as f64 * self.spacing.x,
            self.origin.y + (self.dims[1] - 2) as f64 * self.spacing.y,
            self.origin.z + (self.dims[2] - 2) as f64 * self.spacing.z,
        );
        (lo, hi)
    }

    pub fn contains(&self, r: &Vec3) -> bool {
        self.locate(r).is_ok()
    }

    /// Tricubic Hermite stencil for `r`, rejecting positions within one cell
    /// of the edge.
    pub(crate) fn locate(&self, r: &Vec3) -> Result<Stencil> {
        let mut base = [0usize; 3];
        let mut basis = [[[[0.0; 2]; 2]; 3]; 3];
        for a in 0..3 {
            let u = (r[a] - self.origin[a]) / self.spacing[a];
            let top = (self.dims[a] - 2) as f64;
            // Small slack so that nodes on the interior boundary are accepted.
            if !(u >= 1.0 - 1e-9 && u <= top + 1e-9) {
                return Err(Error::OutOfDomain {
                    x: r.x,
                    y: r.y,
                    z: r.z,
                });
            }
            let u = u.clamp(1.0, top);
            let i = (u.floor() as usize).min(self.dims[a] - 3);
            base[a] = i;
            basis[a] = hermite_basis(u - i as f64, self.spacing[a]);
        }
        let (nx, nxy) = (self.dims[0], self.dims[0] * self.dims[1]);
        let b = self.index(base[0], base[1], base[2]);
        let mut nodes = [0usize; 8];
        for (c, node) in nodes.iter_mut().enumerate() {
            *node = b + (c & 1) + ((c >> 1) & 1) * nx + ((c >> 2) & 1) * nxy;
        }
        Ok(Stencil { nodes, basis })
    }
}

/// Cubic Hermite basis on one cell at fraction `t`, spacing `h`:
/// `[derivative order][end][value, slope]`, derivatives taken in metres.
fn hermite_basis(t: f64, h: f64) -> [[[f64; 2]; 2]; 3] {
    let (t2, t3) = (t * t, t * t * t);
    [
        [
            [2.0 * t3 - 3.0 * t2 + 1.0, h * (t3 - 2.0 * t2 + t)],
            [-2.0 * t3 + 3.0 * t2, h * (t3 - t2)],
        ],
        [
            [(6.0 * t2 - 6.0 * t) / h, 3.0 * t2 - 4.0 * t + 1.0],
            [(-6.0 * t2 + 6.0 * t) / h, 3.0 * t2 - 2.0 * t],
        ],
        [
            [(12.0 * t - 6.0) / (h * h), (6.0 * t - 4.0) / h],
            [(-12.0 * t + 6.0) / (h * h), (6.0 * t - 2.0) / h],
        ],
    ]
}

/// Nodal data per node: `f, fx, fy, fxy, fz, fxz, fyz, fxyz` (bit `a` of the
/// index marks a derivative along axis `a`).
pub(crate) type HermiteNode = [f64; 8];

/// Derivative orders of value, gradient and Hessian (xx, xy, xz, yy, yz, zz).
pub(crate) const VALUE: [usize; 3] = [0, 0, 0];
pub(crate) const GRAD: [[usize; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
pub(crate) const HESS: [[usize; 3]; 6] = [
    [2, 0, 0],
    [1, 1, 0],
    [1, 0, 1],
    [0, 2, 0],
    [0, 1, 1],
    [0, 0, 2],
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil {
    pub nodes: [usize; 8],
    basis: [[[[f64; 2]; 2]; 3]; 3],
}

impl Stencil {
    /// Derivative of orders `d` of the interpolant built from corner data.
    #[inline]
    pub fn eval(&self, d: [usize; 3], data: &[HermiteNode; 8]) -> f64 {
        let [bx, by, bz] = [&self.basis[0][d[0]], &self.basis[1][d[1]], &self.basis[2][d[2]]];
        let mut acc = 0.0;
        for (c, node) in data.iter().enumerate() {
            let (cx, cy, cz) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
            for (k, &v) in node.iter().enumerate() {
                acc += bx[cx][k & 1] * by[cy][(k >> 1) & 1] * bz[cz][(k >> 2) & 1] * v;
            }
        }
        acc
    }

    pub fn gradient(&self, data: &[HermiteNode; 8]) -> Vec3 {
        Vec3::new(
            self.eval(GRAD[0], data),
            self.eval(GRAD[1], data),
            self.eval(GRAD[2], data),
        )
    }

    pub fn sample(&self, data: &[HermiteNode; 8]) -> FieldSample {
        let g = self.gradient(data);
        let h = HESS.map(|d| self.eval(d, data));
        FieldSample::from_parts(self.eval(VALUE, data), [g.x, g.y, g.z], h)
    }
}

/// Scalar samples on a [`SpatialGrid`], volts.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(ScalarField { grid, values })
    }

    /// Sample an analytic function at every node.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(&Vec3) -> f64) -> Result<Self> {
        let [nx, ny, nz] = grid.dims;
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    values.push(f(&grid.node(i, j, k)));
                }
            }
        }
        ScalarField::new(grid, values)
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        let n = grid.len();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Gradient and Hessian at every node by fourth-order finite differences
    /// (off-centre near the faces), falling back to second order on axes too
    /// short for the wider stencils.
    pub fn derivatives(&self) -> Derivatives {
        let g = &self.grid;
        let n = g.len();
        let mut grad = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (a, out) in grad.iter_mut().enumerate() {
            first_difference(g, &self.values, a, out);
        }
        let mut hess: [Vec<f64>; 6] = Default::default();
        for (slot, (a, b)) in HESS_PAIRS.iter().enumerate() {
            let mut out = vec![0.0; n];
            if a == b {
                second_difference(g, &self.values, *a, &mut out);
            } else {
                first_difference(g, &grad[*a], *b, &mut out);
            }
            hess[slot] = out;
        }
        Derivatives { grad, hess }
    }

    /// Value, first derivatives and mixed derivatives at every node, the
    /// data of the tricubic Hermite interpolant.
    pub(crate) fn hermite_data(&self) -> Vec<HermiteNode> {
        let g = &self.grid;
        let n = g.len();
        let d = |f: &[f64], a: usize| {
            let mut out = vec![0.0; n];
            first_difference(g, f, a, &mut out);
            out
        };
        let fx = d(&self.values, 0);
        let fy = d(&self.values, 1);
        let fz = d(&self.values, 2);
        let fxy = d(&fx, 1);
        let fxz = d(&fx, 2);
        let fyz = d(&fy, 2);
        let fxyz = d(&fxy, 2);
        (0..n)
            .map(|i| [self.values[i], fx[i], fy[i], fxy[i], fz[i], fxz[i], fyz[i], fxyz[i]])
            .collect()
    }

    /// Discrete Laplacian residual at interior nodes, relative to the largest
    /// second derivative magnitude found in the field.
    pub fn laplacian_residual(&self) -> f64 {
        let d = self.derivatives();
        let [nx, ny, nz] = self.grid.dims;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in 1..nz - 1 {
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    let idx = self.grid.index(i, j, k);
                    let (xx, yy, zz) = (d.hess[0][idx], d.hess[3][idx], d.hess[5][idx]);
                    worst = worst.max((xx + yy + zz).abs());
                    scale = scale.max(xx.abs()).max(yy.abs()).max(zz.abs());
                }
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

/// Hessian component order used throughout: xx, xy, xz, yy, yz, zz.
pub(crate) const HESS_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

#[derive(Debug, Clone)]
pub struct Derivatives {
    pub grad: [Vec<f64>; 3],
    pub hess: [Vec<f64>; 6],
}

fn axis_stride(g: &SpatialGrid, axis: usize) -> usize {
    match axis {
        0 => 1,
        1 => g.dims[0],
        _ => g.dims[0] * g.dims[1],
    }
}

fn axis_coord(g: &SpatialGrid, idx: usize, axis: usize) -> usize {
    match axis {
        0 => idx % g.dims[0],
        1 => (idx / g.dims[0]) % g.dims[1],
        _ => idx / (g.dims[0] * g.dims[1]),
    }
}

/// `(first offset, coefficients, divisor)` of a first-derivative stencil at
/// node `i` of `n`.
fn first_stencil(i: usize, n: usize) -> (isize, &'static [f64], f64) {
    if n < 5 {
        return if i == 0 {
            (0, &[-3.0, 4.0, -1.0], 2.0)
        } else if i == n - 1 {
            (-2, &[1.0, -4.0, 3.0], 2.0)
        } else {
            (-1, &[-1.0, 0.0, 1.0], 2.0)
        };
    }
    match i {
        0 => (0, &[-25.0, 48.0, -36.0, 16.0, -3.0], 12.0),
        1 => (-1, &[-3.0, -10.0, 18.0, -6.0, 1.0], 12.0),
        _ if i == n - 2 => (-3, &[-1.0, 6.0, -18.0, 10.0, 3.0], 12.0),
        _ if i == n - 1 => (-4, &[3.0, -16.0, 36.0, -48.0, 25.0], 12.0),
        _ => (-2, &[1.0, -8.0, 0.0, 8.0, -1.0], 12.0),
    }
}

fn second_stencil(i: usize, n: usize) -> (isize, &'static [f64], f64) {
    if n < 6 {
        return if i == 0 {
            (0, &[2.0, -5.0, 4.0, -1.0], 1.0)
        } else if i == n - 1 {
            (-3, &[-1.0, 4.0, -5.0, 2.0], 1.0)
        } else {
            (-1, &[1.0, -2.0, 1.0], 1.0)
        };
    }
    match i {
        0 => (0, &[45.0, -154.0, 214.0, -156.0, 61.0, -10.0], 12.0),
        1 => (-1, &[10.0, -15.0, -4.0, 14.0, -6.0, 1.0], 12.0),
        _ if i == n - 2 => (-4, &[1.0, -6.0, 14.0, -4.0, -15.0, 10.0], 12.0),
        _ if i == n - 1 => (-5, &[-10.0, 61.0, -156.0, 214.0, -154.0, 45.0], 12.0),
        _ => (-2, &[-1.0, 16.0, -30.0, 16.0, -1.0], 12.0),
    }
}

fn apply_stencil(
    g: &SpatialGrid,
    f: &[f64],
    axis: usize,
    order: i32,
    table: fn(usize, usize) -> (isize, &'static [f64], f64),
    out: &mut [f64],
) {
    let s = axis_stride(g, axis) as isize;
    let n = g.dims[axis];
    let scale = g.spacing[axis].powi(order);
    for (idx, o) in out.iter_mut().enumerate() {
        let (start, c, div) = table(axis_coord(g, idx, axis), n);
        let mut acc = 0.0;
        for (j, cj) in c.iter().enumerate() {
            acc += cj * f[(idx as isize + (start + j as isize) * s) as usize];
        }
        *o = acc / (div * scale);
    }
}

fn first_difference(g: &SpatialGrid, f: &[f64], axis: usize, out: &mut [f64]) {
    apply_stencil(g, f, axis, 1, first_stencil, out);
}

fn second_difference(g: &SpatialGrid, f: &[f64], axis: usize, out: &mut [f64]) {
    apply_stencil(g, f, axis, 2, second_stencil, out);
}

/// Value, gradient (V/m) and Hessian (V/m^2) of a potential at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: f64,
    pub gradient: Vec3,
    pub hessian: Matrix3<f64>,
}

impl FieldSample {
    pub fn zero() -> Self {
        FieldSample {
            value: 0.0,
            gradient: Vec3::zeros(),
            hessian: Matrix3::zeros(),
        }
    }

    pub(crate) fn from_parts(value: f64, grad: [f64; 3], hess: [f64; 6]) -> Self {
        let [xx, xy, xz, yy, yz, zz] = hess;
        FieldSample {
            value,
            gradient: Vec3::new(grad[0], grad[1], grad[2]),
            hessian: Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        FieldSample {
            value: self.value * s,
            gradient: self.gradient * s,
            hessian: self.hessian * s,
        }
    }

    pub fn add_scaled(&mut self, other: &FieldSample, s: f64) {
        self.value += s * other.value;
        self.gradient += other.gradient * s;
        self.hessian += other.hessian * s;
    }
}
