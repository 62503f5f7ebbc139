//! Truncated joint approximate eigenbases.
//!
//! Pipeline: eigendecompose `L = Σ_j (X_j − λ_j)²`, keep the `k` extreme
//! eigenvectors `V₀`, compress each shifted `X_j` onto them, jointly
//! diagonalize the compressions and rotate `V₀` by the result.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jointdiag::{joint_diagonalize, JointDiagResult, DEFAULT_MAX_SWEEPS};
use crate::linalg::{fmt17, sorted_symmetric_eigen};
use crate::mtx::{format_array, write_atomic};
use crate::quadps::build_q;
use crate::tuple::{symmetrize, LambdaPoint, PartialIsometry, SymmetricTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selector {
    #[default]
    Smallest,
    Largest,
}

impl Selector {
    pub fn as_str(self) -> &'static str {
        match self {
            Selector::Smallest => "smallest",
            Selector::Largest => "largest",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenbasisResult {
    pub v: PartialIsometry,
    /// `lambdas[j][i] = (Vᵀ X_j V)[i,i]`, `d × k`.
    pub lambdas: Vec<Vec<f64>>,
    /// `Σ_j ‖X_j V − V Λ_j‖_F²`
    pub residual_sq: f64,
    /// The `k` selected eigenvalues of `L`, in selection order.
    pub l_eigenvalues: Vec<f64>,
    pub jointdiag: JointDiagResult,
    pub selector: Selector,
    /// Set when the `k`-th selected eigenvalue of `L` ties with the first
    /// unselected one, so the span of `V` depends on solver tie-breaking.
    pub cluster_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenbasisOptions {
    pub k: usize,
    pub delta: f64,
    pub selector: Selector,
    pub max_sweeps: usize,
}

impl EigenbasisOptions {
    pub fn new(k: usize, delta: f64, selector: Selector) -> Self {
        Self {
            k,
            delta,
            selector,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

/// Same matrix as [`build_q`]; `L` is the name used by the eigenbasis pipeline.
pub fn build_l(t: &SymmetricTuple, lambda: &LambdaPoint) -> Result<DMatrix<f64>> {
    build_q(t, lambda)
}

pub fn truncated_joint_eigenbasis(
    t: &SymmetricTuple,
    lambda: &LambdaPoint,
    opts: &EigenbasisOptions,
) -> Result<EigenbasisResult> {
    let n = t.n();
    let k = opts.k;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k must satisfy 1 <= k <= n = {n}, got {k}")));
    }
    if opts.delta.is_nan() || opts.delta <= 0.0 {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {}", opts.delta)));
    }
    let l = build_l(t, lambda)?;
    let eig = sorted_symmetric_eigen(&l)?;

    let selected: Vec<usize> = match opts.selector {
        Selector::Smallest => (0..k).collect(),
        Selector::Largest => (0..k).map(|i| n - 1 - i).collect(),
    };
    let l_eigenvalues: Vec<f64> = selected.iter().map(|&i| eig.values[i]).collect();
    let cluster_warning = k < n && {
        let last = l_eigenvalues[k - 1];
        let next = match opts.selector {
            Selector::Smallest => eig.values[k],
            Selector::Largest => eig.values[n - 1 - k],
        };
        (last - next).abs() <= 1e-10 * (1.0 + last.abs())
    };
    let v0 = DMatrix::from_fn(n, k, |r, c| eig.vectors[(r, selected[c])]);

    let (mut v, jointdiag) = rotate_basis(t, lambda, &v0, opts.delta, opts.max_sweeps)?;

    // Deterministic column order by the Rayleigh quotients of L.
    let lv = &l * &v;
    let mut keys: Vec<(f64, usize)> = (0..k).map(|i| (v.column(i).dot(&lv.column(i)), i)).collect();
    match opts.selector {
        Selector::Smallest => keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))),
        Selector::Largest => keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))),
    }
    v = DMatrix::from_fn(n, k, |r, c| v[(r, keys[c].1)]);

    let v = PartialIsometry::new(v)?;
    let lambdas = diagonal_estimates(t, &v);
    let residual_sq = residual(t, &v, &lambdas)?;
    Ok(EigenbasisResult {
        v,
        lambdas,
        residual_sq,
        l_eigenvalues,
        jointdiag,
        selector: opts.selector,
        cluster_warning,
    })
}

/// Compresses each `X_j − λ_j` onto the columns of `v0`, jointly
/// diagonalizes the (symmetrized) compressions and returns `v0 W`.
pub fn rotate_basis(
    t: &SymmetricTuple,
    lambda: &LambdaPoint,
    v0: &DMatrix<f64>,
    delta: f64,
    max_sweeps: usize,
) -> Result<(DMatrix<f64>, JointDiagResult)> {
    t.check_lambda(lambda)?;
    if v0.nrows() != t.n() {
        return Err(Error::ShapeMismatch(format!(
            "basis has {} rows, tuple has n = {}",
            v0.nrows(),
            t.n()
        )));
    }
    let ys: Vec<DMatrix<f64>> = (0..t.d())
        .map(|j| symmetrize(&(v0.tr_mul(&(t.shifted(j, lambda[j]) * v0)))))
        .collect();
    let jointdiag = joint_diagonalize(&ys, delta, max_sweeps)?;
    Ok((v0 * &jointdiag.w, jointdiag))
}

/// `(Vᵀ X_j V)[i,i]` for every `j` and column `i`.
pub fn diagonal_estimates(t: &SymmetricTuple, v: &PartialIsometry) -> Vec<Vec<f64>> {
    let v = v.matrix();
    t.matrices()
        .iter()
        .map(|x| {
            let xv = x * v;
            (0..v.ncols()).map(|i| v.column(i).dot(&xv.column(i))).collect()
        })
        .collect()
}

/// `Σ_j Σ_i ‖X_j v_i − lambdas[j][i] v_i‖²`
pub fn residual(t: &SymmetricTuple, v: &PartialIsometry, lambdas: &[Vec<f64>]) -> Result<f64> {
    let vm = v.matrix();
    if vm.nrows() != t.n() {
        return Err(Error::ShapeMismatch(format!(
            "V has {} rows, tuple has n = {}",
            vm.nrows(),
            t.n()
        )));
    }
    if lambdas.len() != t.d() || lambdas.iter().any(|row| row.len() != vm.ncols()) {
        return Err(Error::ShapeMismatch(format!(
            "lambdas must be {} x {}",
            t.d(),
            vm.ncols()
        )));
    }
    let mut total = 0.0;
    for (x, row) in t.matrices().iter().zip(lambdas) {
        let mut r = x * vm;
        for (i, &l) in row.iter().enumerate() {
            r.column_mut(i).axpy(-l, &vm.column(i), 1.0);
        }
        total += r.norm_squared();
    }
    Ok(total)
}

impl EigenbasisResult {
    pub fn lambdas_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.lambdas {
            let line: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Flat `key=value` lines.
    pub fn diagnostics(&self) -> String {
        let mut out = String::new();
        let l_eigs: Vec<String> = self.l_eigenvalues.iter().map(|&x| fmt17(x)).collect();
        let _ = writeln!(out, "residual_sq={}", fmt17(self.residual_sq));
        let _ = writeln!(out, "sweeps={}", self.jointdiag.sweeps);
        let _ = writeln!(out, "converged={}", self.jointdiag.converged);
        let _ = writeln!(out, "off_norm_final={}", fmt17(self.jointdiag.final_off_norm()));
        let _ = writeln!(out, "L_eigenvalues={}", l_eigs.join(","));
        let _ = writeln!(out, "selector={}", self.selector.as_str());
        let _ = writeln!(out, "cluster_warning={}", self.cluster_warning);
        let _ = writeln!(out, "n={}", self.v.n());
        let _ = writeln!(out, "k={}", self.v.k());
        let _ = writeln!(out, "orthonormality_error={}", fmt17(self.v.orthonormality_error()));
        out
    }

    /// Writes `V.mtx`, `lambdas.csv` and `diagnostics.txt` into `dir`,
    /// creating it if needed. Each file is replaced atomically.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            ("V.mtx", format_array(self.v.matrix())),
            ("lambdas.csv", self.lambdas_csv()),
            ("diagnostics.txt", self.diagnostics()),
        ];
        for (name, body) in files {
            write_atomic(&dir.join(name), body.as_bytes())?;
        }
        Ok(())
    }
}
