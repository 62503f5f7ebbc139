//! Quadratic pseudospectrum kernels.
//!
//! For a tuple `(X_1, …, X_d)` and shift `λ`, the function
//!
//! ```text
//! μ(λ) = min_{‖v‖=1} sqrt(Σ_j ‖X_j v − λ_j v‖²)
//! ```
//!
//! is computed either as the smallest singular value of the stacked matrix
//! `M_λ = [X_1 − λ_1; …; X_d − λ_d]` or as the square root of the smallest
//! eigenvalue of `Q_λ = Σ_j (X_j − λ_j)² = M_λᵀ M_λ`. The two kernels agree
//! in exact arithmetic, which the test suite exploits as a built-in oracle.
//! `μ` is 1-Lipschitz in `λ`; [`crate::slice`] uses that to prune grid scans.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, leading_multiplicity, smallest_right_singular, sorted_symmetric_eigen};
use crate::tuple::{LambdaPoint, SymmetricTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// Smallest singular value of the `(d·n) × n` stack `M_λ`.
    StackedSvd,
    /// Square root of the smallest eigenvalue of the `n × n` matrix `Q_λ`.
    #[default]
    SquaredEig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuResult {
    pub mu: f64,
    /// Unit vector attaining the minimum, first nonzero entry nonnegative.
    pub witness: DVector<f64>,
    pub kernel_used: Kernel,
    /// How many singular values (or eigenvalues) tie with the minimum. The
    /// witness is arbitrary within that space when this exceeds one.
    pub multiplicity: usize,
}

/// `Q_λ = Σ_j (X_j − λ_j I)²`, exactly symmetric.
pub fn build_q(t: &SymmetricTuple, lambda: &LambdaPoint) -> Result<DMatrix<f64>> {
    t.check_lambda(lambda)?;
    let n = t.n();
    let mut q = DMatrix::zeros(n, n);
    for j in 0..t.d() {
        let s = t.shifted(j, lambda[j]);
        q.gemm(1.0, &s, &s, 1.0);
    }
    Ok(crate::tuple::symmetrize(&q))
}

/// `M_λ`: block row `j` holds `X_j − λ_j I`.
pub fn build_m(t: &SymmetricTuple, lambda: &LambdaPoint) -> Result<DMatrix<f64>> {
    t.check_lambda(lambda)?;
    let n = t.n();
    let mut m = DMatrix::zeros(t.d() * n, n);
    for j in 0..t.d() {
        m.view_mut((j * n, 0), (n, n)).copy_from(&t.shifted(j, lambda[j]));
    }
    Ok(m)
}

fn tie_tolerance(scale: f64) -> f64 {
    1e-10 * (1.0 + scale)
}

pub fn mu_quadratic(t: &SymmetricTuple, lambda: &LambdaPoint, kernel: Kernel) -> Result<MuResult> {
    let (mu, mut witness, multiplicity) = match kernel {
        Kernel::StackedSvd => {
            let m = build_m(t, lambda)?;
            let (sigma, v, all) = smallest_right_singular(&m)?;
            let mut sorted = all;
            sorted.sort_by(f64::total_cmp);
            let scale = sorted.last().copied().unwrap_or(0.0);
            (sigma, v, leading_multiplicity(&sorted, tie_tolerance(scale)))
        }
        Kernel::SquaredEig => {
            let q = build_q(t, lambda)?;
            let eig = sorted_symmetric_eigen(&q)?;
            let values = eig.values.as_slice();
            let scale = values.last().copied().unwrap_or(0.0).abs();
            // Q is PSD in exact arithmetic.
            let mu = values[0].max(0.0).sqrt();
            (
                mu,
                eig.vectors.column(0).into_owned(),
                leading_multiplicity(values, tie_tolerance(scale)),
            )
        }
    };
    if !mu.is_finite() {
        return Err(Error::NonConvergence {
            routine: "quadratic pseudospectrum kernel",
        });
    }
    witness /= witness.norm();
    canonical_sign(&mut witness);
    Ok(MuResult {
        mu,
        witness,
        kernel_used: kernel,
        multiplicity,
    })
}

/// `sqrt(Σ_j ‖X_j v − λ_j v‖²)` for an arbitrary vector `v`.
pub fn stacked_residual(t: &SymmetricTuple, lambda: &LambdaPoint, v: &DVector<f64>) -> Result<f64> {
    t.check_lambda(lambda)?;
    if v.len() != t.n() {
        return Err(Error::DimensionMismatch {
            expected: t.n(),
            found: v.len(),
        });
    }
    let mut total = 0.0;
    for (j, x) in t.matrices().iter().enumerate() {
        let r = x * v - v * lambda[j];
        total += r.norm_squared();
    }
    Ok(total.sqrt())
}

/// Whether `λ` belongs to the quadratic `ε`-pseudospectrum, i.e. `μ(λ) ≤ ε`.
pub fn in_pseudospectrum(
    t: &SymmetricTuple,
    lambda: &LambdaPoint,
    epsilon: f64,
    kernel: Kernel,
) -> Result<bool> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(mu_quadratic(t, lambda, kernel)?.mu <= epsilon)
}

/// Evaluates `μ` at many points; runs on the rayon pool when the
/// `parallel` feature is enabled.
pub fn mu_batch(t: &SymmetricTuple, points: &[LambdaPoint], kernel: Kernel) -> Vec<Result<MuResult>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points.par_iter().map(|p| mu_quadratic(t, p, kernel)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points.iter().map(|p| mu_quadratic(t, p, kernel)).collect()
    }
}
