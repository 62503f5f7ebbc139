//! Dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

fn iteration_cap(n: usize) -> usize {
    1000 * n.max(1) + 1000
}

/// Eigendecomposition of a symmetric matrix with eigenpairs sorted by
/// ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    /// Column `i` pairs with `values[i]`.
    pub vectors: DMatrix<f64>,
}

pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> Result<SortedEigen> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, iteration_cap(n)).ok_or(
        Error::NonConvergence {
            routine: "symmetric eigensolver",
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SortedEigen { values, vectors })
}

/// Smallest singular value of `m` (rows ≥ cols) and its right singular vector.
pub fn smallest_right_singular(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>, Vec<f64>)> {
    let cols = m.ncols();
    let svd = SVD::try_new(m.clone(), false, true, f64::EPSILON, iteration_cap(cols)).ok_or(
        Error::NonConvergence {
            routine: "singular value decomposition",
        },
    )?;
    let v_t = svd.v_t.ok_or(Error::NonConvergence {
        routine: "singular value decomposition",
    })?;
    let mut idx = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < svd.singular_values[idx] {
            idx = i;
        }
    }
    let v = v_t.row(idx).transpose();
    Ok((svd.singular_values[idx], v, svd.singular_values.iter().copied().collect()))
}

/// Flips `v` so that its first nonzero entry is nonnegative.
pub fn canonical_sign(v: &mut DVector<f64>) {
    if let Some(first) = v.iter().find(|x| **x != 0.0) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Number of entries of the ascending slice `values` within `tol` of its first element.
pub fn leading_multiplicity(values: &[f64], tol: f64) -> usize {
    match values.first() {
        Some(&first) => values.iter().take_while(|&&x| x - first <= tol).count(),
        None => 0,
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// max_{i,j} |(VᵀV − I)[i,j]|
pub fn orthonormality_error(v: &DMatrix<f64>) -> f64 {
    let gram = v.tr_mul(v);
    let k = gram.nrows();
    let mut err: f64 = 0.0;
    for j in 0..k {
        for i in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((gram[(i, j)] - target).abs());
        }
    }
    err
}

/// Haar-distributed orthogonal matrix: QR of a standard-normal matrix with
/// the diagonal of R made positive.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random symmetric matrix with standard-normal upper triangle.
pub fn random_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x: f64 = rng.sample(StandardNormal);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

/// Formats a double with 17 significant digits, enough to round-trip.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
