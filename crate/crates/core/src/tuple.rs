//! Domain types shared by every module: the matrix tuple, shift points and
//! partial isometries.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, orthonormality_error};
use crate::mtx;

/// Relative symmetry tolerance applied when a tuple is constructed.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Orthonormality tolerance for [`PartialIsometry`].
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-12;

/// Returns (A + Aᵀ)/2.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "symmetrize needs a square matrix");
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)]) / 2.0)
}

fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            dev = dev.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    dev
}

/// An ordered family of `d ≥ 1` real symmetric `n × n` matrices.
///
/// Every stored matrix is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTuple {
    matrices: Vec<DMatrix<f64>>,
    n: usize,
}

impl SymmetricTuple {
    /// Validates and symmetrizes `matrices`. Inputs whose asymmetry exceeds
    /// `1e-12 · (1 + max|A|)` are rejected.
    pub fn new(matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidArgument("tuple needs at least one matrix".into()))?;
        let n = first.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument("matrices must be at least 1x1".into()));
        }
        let mut stored = Vec::with_capacity(matrices.len());
        for a in &matrices {
            if !a.is_square() {
                return Err(Error::NotSquare {
                    rows: a.nrows(),
                    cols: a.ncols(),
                });
            }
            if a.nrows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: a.nrows(),
                });
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
            }
            let tolerance = SYMMETRY_TOLERANCE * (1.0 + max_abs(a));
            let deviation = asymmetry(a);
            if deviation > tolerance {
                return Err(Error::Asymmetric {
                    deviation,
                    tolerance,
                });
            }
            stored.push(symmetrize(a));
        }
        Ok(Self {
            matrices: stored,
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn get(&self, j: usize) -> &DMatrix<f64> {
        &self.matrices[j]
    }

    /// `X_j − shift·I`
    pub fn shifted(&self, j: usize, shift: f64) -> DMatrix<f64> {
        let mut s = self.matrices[j].clone();
        for i in 0..self.n {
            s[(i, i)] -= shift;
        }
        s
    }

    pub(crate) fn check_lambda(&self, lambda: &LambdaPoint) -> Result<()> {
        if lambda.len() != self.d() {
            return Err(Error::LengthMismatch {
                expected: self.d(),
                found: lambda.len(),
            });
        }
        Ok(())
    }
}

/// Reads one Matrix Market file per tuple member.
pub fn load_tuple<P: AsRef<Path>>(paths: &[P]) -> Result<SymmetricTuple> {
    let matrices = paths
        .iter()
        .map(mtx::read_matrix)
        .collect::<Result<Vec<_>>>()?;
    SymmetricTuple::new(matrices)
}

/// A shift point λ ∈ ℝᵈ.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPoint(Vec<f64>);

impl LambdaPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn distance(&self, other: &LambdaPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for LambdaPoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl std::ops::Index<usize> for LambdaPoint {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// An `n × k` matrix with orthonormal columns, `1 ≤ k ≤ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialIsometry(DMatrix<f64>);

impl PartialIsometry {
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        let (n, k) = columns.shape();
        if k == 0 || k > n {
            return Err(Error::ShapeMismatch(format!(
                "partial isometry needs 1 <= k <= n, got {n}x{k}"
            )));
        }
        let err = orthonormality_error(&columns);
        if err.is_nan() || err > ORTHONORMALITY_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "columns are not orthonormal: max |VᵀV - I| = {err:e}"
            )));
        }
        Ok(Self(columns))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn k(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.0)
    }
}
