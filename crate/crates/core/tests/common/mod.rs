#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use qjae::linalg::{random_orthogonal, random_symmetric};
use qjae::SymmetricTuple;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tuple(n: usize, d: usize, rng: &mut ChaCha8Rng) -> SymmetricTuple {
    SymmetricTuple::new((0..d).map(|_| random_symmetric(n, rng)).collect()).unwrap()
}

pub fn random_lambda(d: usize, half_width: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-half_width..half_width)).collect()
}

/// A commuting family `Q diag(D_j) Qᵀ` whose joint eigenvalue tuples are
/// pairwise at least `gap` apart (Euclidean).
pub struct CommutingFamily {
    pub q: DMatrix<f64>,
    /// `diags[j][i]`
    pub diags: Vec<Vec<f64>>,
    pub matrices: Vec<DMatrix<f64>>,
}

pub fn commuting_family(k: usize, d: usize, gap: f64, rng: &mut ChaCha8Rng) -> CommutingFamily {
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(k);
    while points.len() < k {
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let far = points.iter().all(|o| {
            o.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= gap
        });
        if far {
            points.push(p);
        }
    }
    let q = random_orthogonal(k, rng);
    let diags: Vec<Vec<f64>> = (0..d).map(|j| points.iter().map(|p| p[j]).collect()).collect();
    let matrices = diags
        .iter()
        .map(|dj| {
            let m = &q * DMatrix::from_diagonal(&DVector::from_vec(dj.clone())) * q.transpose();
            qjae::symmetrize(&m)
        })
        .collect();
    CommutingFamily { q, diags, matrices }
}

/// Spectral norm of a symmetric matrix via its eigenvalues.
pub fn sym_norm2(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0, |a: f64, x| a.max(x.abs()))
}

/// Matches columns of `w` to columns of `q` by largest absolute overlap.
pub fn match_columns(q: &DMatrix<f64>, w: &DMatrix<f64>) -> Vec<(usize, f64)> {
    let overlap = q.transpose() * w;
    (0..w.ncols())
        .map(|i| {
            let col = overlap.column(i);
            let (m, v) = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .unwrap();
            (m, v.abs())
        })
        .collect()
}
