//! Orthogonal joint approximate diagonalization by cyclic Jacobi sweeps.
//!
//! Each planar rotation in coordinates `(p, q)` is the exact minimizer of
//! the `(p, q)` off-diagonal mass summed over the whole family, so the
//! off-norm never increases.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct JointDiagResult {
    /// Orthogonal `k × k` accumulator of all rotations.
    pub w: DMatrix<f64>,
    /// `Wᵀ Y_j W` for each input.
    pub transformed: Vec<DMatrix<f64>>,
    /// Off-norm before the first sweep followed by its value after each sweep.
    pub off_history: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl JointDiagResult {
    pub fn final_off_norm(&self) -> f64 {
        *self.off_history.last().expect("history is never empty")
    }
}

fn check_family(ys: &[DMatrix<f64>]) -> Result<usize> {
    let k = ys
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty matrix family".into()))?
        .nrows();
    for y in ys {
        if y.shape() != (k, k) {
            return Err(Error::ShapeMismatch(format!(
                "expected {k}x{k}, found {}x{}",
                y.nrows(),
                y.ncols()
            )));
        }
    }
    Ok(k)
}

/// `Σ_j Σ_{i≠l} Y_j[i,l]²`
pub fn off_norm(ys: &[DMatrix<f64>]) -> Result<f64> {
    check_family(ys)?;
    Ok(off_norm_unchecked(ys))
}

fn off_norm_unchecked(ys: &[DMatrix<f64>]) -> f64 {
    let mut total = 0.0;
    for y in ys {
        let k = y.nrows();
        for l in 0..k {
            for i in 0..k {
                if i != l {
                    total += y[(i, l)] * y[(i, l)];
                }
            }
        }
    }
    total
}

/// Cosine and sine of the rotation in the `(p, q)` plane that minimizes
/// the family's `(p, q)` off-diagonal mass.
///
/// With `h_j = (Y_j[p,p] − Y_j[q,q], 2 Y_j[p,q])` and `G = Σ_j h_j h_jᵀ`,
/// the optimal `(cos 2θ, sin 2θ)` is the dominant eigenvector of `G` taken
/// with nonnegative first component. The rotation acts as
/// `Y ← Rᵀ Y R` with `R[p,p] = R[q,q] = c`, `R[p,q] = −s`, `R[q,p] = s`.
pub fn rotation_angle(ys: &[DMatrix<f64>], p: usize, q: usize) -> (f64, f64) {
    assert!(p < q, "rotation_angle needs p < q");
    if ys.iter().all(|y| y[(p, q)] == 0.0) {
        return (1.0, 0.0);
    }
    let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
    for y in ys {
        let h1 = y[(p, p)] - y[(q, q)];
        let h2 = 2.0 * y[(p, q)];
        g11 += h1 * h1;
        g12 += h1 * h2;
        g22 += h2 * h2;
    }
    // Dominant eigenvector of G at angle φ = atan2(2 g12, g11 − g22) / 2,
    // φ ∈ (−π/2, π/2], so (cos φ, sin φ) has x ≥ 0. θ = φ/2.
    let theta = 0.25 * (2.0 * g12).atan2(g11 - g22);
    (theta.cos(), theta.sin())
}

fn apply_rotation(y: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let k = y.nrows();
    // Columns: Y ← Y R
    for i in 0..k {
        let yp = y[(i, p)];
        let yq = y[(i, q)];
        y[(i, p)] = c * yp + s * yq;
        y[(i, q)] = -s * yp + c * yq;
    }
    // Rows: Y ← Rᵀ Y
    for l in 0..k {
        let yp = y[(p, l)];
        let yq = y[(q, l)];
        y[(p, l)] = c * yp + s * yq;
        y[(q, l)] = -s * yp + c * yq;
    }
    // Restore exact symmetry of the touched entries.
    for i in 0..k {
        let a = 0.5 * (y[(i, p)] + y[(p, i)]);
        y[(i, p)] = a;
        y[(p, i)] = a;
        let b = 0.5 * (y[(i, q)] + y[(q, i)]);
        y[(i, q)] = b;
        y[(q, i)] = b;
    }
}

fn rotate_columns(w: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..w.nrows() {
        let wp = w[(i, p)];
        let wq = w[(i, q)];
        w[(i, p)] = c * wp + s * wq;
        w[(i, q)] = -s * wp + c * wq;
    }
}

/// Cyclic Jacobi sweeps over all pairs `p < q` in lexicographic order.
///
/// Stops when the off-norm drops to `δ²` or when a sweep reduces it by at
/// most `δ² (off₀ + 1)`; running out of sweeps is reported through
/// `converged = false`.
pub fn joint_diagonalize(ys: &[DMatrix<f64>], delta: f64, max_sweeps: usize) -> Result<JointDiagResult> {
    let k = check_family(ys)?;
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if max_sweeps == 0 {
        return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
    }
    let mut transformed: Vec<DMatrix<f64>> = ys.iter().map(crate::tuple::symmetrize).collect();
    let mut w = DMatrix::identity(k, k);
    let initial = off_norm_unchecked(&transformed);
    let mut off_history = vec![initial];
    let threshold = delta * delta;

    let mut converged = initial <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < max_sweeps {
        for p in 0..k {
            for q in (p + 1)..k {
                let (c, s) = rotation_angle(&transformed, p, q);
                if s == 0.0 {
                    continue;
                }
                for y in transformed.iter_mut() {
                    apply_rotation(y, p, q, c, s);
                }
                rotate_columns(&mut w, p, q, c, s);
            }
        }
        sweeps += 1;
        let previous = *off_history.last().unwrap();
        let current = off_norm_unchecked(&transformed);
        off_history.push(current);
        converged = current <= threshold || previous - current <= threshold * (initial + 1.0);
    }

    Ok(JointDiagResult {
        w,
        transformed,
        off_history,
        sweeps,
        converged,
    })
}
