//! Bounded-variable least squares: min |A x - b| subject to lo <= x <= hi.
//!
//! Active-set iteration after Lawson & Hanson / Stark & Parker. Each free
//! subproblem is solved with an SVD pseudo-inverse, so rank-deficient designs
//! return the minimum-norm solution over the free variables.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Free,
    Lower,
    Upper,
}

#[derive(Debug, Clone)]
pub struct BvlsSolution {
    pub x: DVector<f64>,
    pub state: Vec<Bound>,
    pub iterations: usize,
}

/// Relative singular-value cutoff of the free subproblem solves.
pub const RANK_TOL: f64 = 1e-10;

fn pinv_solve(a: &DMatrix<f64>, cols: &[usize], rhs: &DVector<f64>) -> DVector<f64> {
    if cols.is_empty() {
        return DVector::zeros(0);
    }
    let sub = a.select_columns(cols);
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = RANK_TOL * smax.max(f64::MIN_POSITIVE);
    svd.solve(rhs, eps)
        .unwrap_or_else(|_| DVector::zeros(cols.len()))
}

/// Solve the bounded problem. `lo[i] == hi[i]` pins variable `i`.
pub fn bvls(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lo: &[f64],
    hi: &[f64],
    max_iterations: usize,
) -> Result<BvlsSolution> {
    let n = a.ncols();
    if lo.len() != n || hi.len() != n || b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: lo.len().min(hi.len()),
        });
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
        return Err(Error::invalid("empty bound box"));
    }
    let scale: f64 = lo
        .iter()
        .chain(hi)
        .fold(1.0, |m, v| if v.is_finite() { m.max(v.abs()) } else { m });
    let xtol = 1e-13 * scale;

    // Start from the clipped unconstrained minimizer.
    let all: Vec<usize> = (0..n).collect();
    let z = pinv_solve(a, &all, b);
    let mut x = DVector::zeros(n);
    let mut state = vec![Bound::Free; n];
    for i in 0..n {
        if lo[i] == hi[i] {
            x[i] = lo[i];
            state[i] = Bound::Lower;
        } else if z[i] <= lo[i] {
            x[i] = lo[i];
            state[i] = Bound::Lower;
        } else if z[i] >= hi[i] {
            x[i] = hi[i];
            state[i] = Bound::Upper;
        } else {
            x[i] = z[i];
        }
    }

    let mut blocked = vec![false; n];
    let mut just_freed: Option<usize> = None;
    let mut last_obj = f64::INFINITY;
    for iter in 0..max_iterations {
        // Free subproblem with the bound variables held fixed.
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == Bound::Free).collect();
        let mut rhs = b.clone();
        for i in 0..n {
            if state[i] != Bound::Free {
                rhs.axpy(-x[i], &a.column(i).into_owned(), 1.0);
            }
        }
        let zf = pinv_solve(a, &free, &rhs);
        let mut step = f64::INFINITY;
        for (k, &i) in free.iter().enumerate() {
            let d = zf[k] - x[i];
            let t = if zf[k] < lo[i] - xtol {
                (lo[i] - x[i]) / d
            } else if zf[k] > hi[i] + xtol {
                (hi[i] - x[i]) / d
            } else {
                continue;
            };
            step = step.min(t.max(0.0));
        }
        if step.is_finite() {
            // Move toward the subproblem minimizer until the first bound.
            if let Some(t) = just_freed.take() {
                let k = free.iter().position(|&i| i == t).unwrap_or(0);
                if step == 0.0 && outside(zf[k], lo[t], hi[t], xtol) {
                    // The variable we just released wants to return to its
                    // bound: numerical noise, not progress.
                    x[t] = if zf[k] < lo[t] { lo[t] } else { hi[t] };
                    state[t] = if zf[k] < lo[t] { Bound::Lower } else { Bound::Upper };
                    blocked[t] = true;
                    continue;
                }
            }
            for (k, &i) in free.iter().enumerate() {
                x[i] += step * (zf[k] - x[i]);
                if x[i] <= lo[i] + xtol {
                    x[i] = lo[i];
                    state[i] = Bound::Lower;
                } else if x[i] >= hi[i] - xtol {
                    x[i] = hi[i];
                    state[i] = Bound::Upper;
                }
            }
            continue;
        }
        for (k, &i) in free.iter().enumerate() {
            x[i] = zf[k].clamp(lo[i], hi[i]);
        }

        // KKT check on the bound variables. Blocked variables become
        // candidates again only once the objective has strictly improved.
        let r = b - a * &x;
        let obj = r.norm_squared();
        if obj < last_obj * (1.0 - 1e-12) {
            blocked.iter_mut().for_each(|b| *b = false);
            last_obj = obj;
        }
        let w = a.transpose() * r;
        let gtol = 1e-12 * a.norm() * (b.norm() + a.norm() * x.norm()) + f64::MIN_POSITIVE;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if lo[i] == hi[i] || blocked[i] {
                continue;
            }
            let viol = match state[i] {
                Bound::Free => continue,
                Bound::Lower => w[i],
                Bound::Upper => -w[i],
            };
            if viol > gtol && best.is_none_or(|(_, v)| viol > v) {
                best = Some((i, viol));
            }
        }
        match best {
            None => {
                return Ok(BvlsSolution {
                    x,
                    state,
                    iterations: iter + 1,
                })
            }
            Some((t, _)) => {
                state[t] = Bound::Free;
                just_freed = Some(t);
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
    })
}

fn outside(z: f64, lo: f64, hi: f64, tol: f64) -> bool {
    z < lo - tol || z > hi + tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_optimum_matches_least_squares() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 2.9]);
        let s = bvls(&a, &b, &[-10.0, -10.0], &[10.0, 10.0], 50).unwrap();
        let ls = (a.transpose() * &a).try_inverse().unwrap() * a.transpose() * &b;
        assert!((s.x - ls).amax() < 1e-12);
    }

    #[test]
    fn clipped_variable_and_reoptimized_rest() {
        // Unconstrained optimum x = (15, 1); with x0 <= 10 and an identity
        // design the second variable is unaffected.
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DVector::from_vec(vec![15.0, 1.0]);
        let s = bvls(&a, &b, &[-10.0, -10.0], &[10.0, 10.0], 50).unwrap();
        assert_eq!(s.x[0], 10.0);
        assert!((s.x[1] - 1.0).abs() < 1e-14);
        assert_eq!(s.state[0], Bound::Upper);
    }

    #[test]
    fn coupled_bound_solution() {
        // min (x + y - 30)^2 + (x - y)^2 in [-10, 10]^2 -> (10, 10).
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let b = DVector::from_vec(vec![30.0, 0.0]);
        let s = bvls(&a, &b, &[-10.0, -10.0], &[10.0, 10.0], 50).unwrap();
        assert!((s.x[0] - 10.0).abs() < 1e-14 && (s.x[1] - 10.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_gives_min_norm() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![3.0]);
        let s = bvls(&a, &b, &[-10.0; 3], &[10.0; 3], 50).unwrap();
        for i in 0..3 {
            assert!((s.x[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pinned_variables_stay_put() {
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DVector::from_vec(vec![5.0, 5.0]);
        let s = bvls(&a, &b, &[1.0, -10.0], &[1.0, 10.0], 50).unwrap();
        assert_eq!(s.x[0], 1.0);
        assert!((s.x[1] - 5.0).abs() < 1e-14);
    }
}
