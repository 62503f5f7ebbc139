//! Projection-based reduction of a two-stage discrete-time system
//!
//! ```text
//! x₁(t+1) = A₁ x₁(t),   x₂(t+1) = A₂ x₁(t+1),
//! y₁(t) = x₁(t)[out1],  y₂(t) = x₂(t)[out2],
//! ```
//!
//! with commuting `A₁`, `A₂`, onto the span of a partial isometry `V`.
//! `x₂(0)` is taken as `A₂ x₁(0)` so both outputs have `T + 1` samples.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::eigenbasis::{truncated_joint_eigenbasis, EigenbasisOptions, EigenbasisResult, Selector};
use crate::error::{Error, Result};
use crate::linalg::{fmt17, random_orthogonal};
use crate::tuple::{symmetrize, LambdaPoint, PartialIsometry, SymmetricTuple};

#[derive(Debug, Clone, PartialEq)]
pub struct LtiPair {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub out1: usize,
    pub out2: usize,
}

impl LtiPair {
    /// Checks shapes and `‖A₁A₂ − A₂A₁‖_F ≤ 1e-10 (1 + ‖A₁‖_F ‖A₂‖_F)`.
    /// A spectral radius of `A₁` above one is logged, not rejected.
    pub fn new(a1: DMatrix<f64>, a2: DMatrix<f64>, out1: usize, out2: usize) -> Result<Self> {
        let pair = Self::checked(a1, a2, out1, out2)?;
        let rho = pair.spectral_radius_a1();
        if rho > 1.0 {
            log::warn!("A1 has spectral radius {rho} > 1");
        }
        Ok(pair)
    }

    fn checked(a1: DMatrix<f64>, a2: DMatrix<f64>, out1: usize, out2: usize) -> Result<Self> {
        let n = a1.nrows();
        if !a1.is_square() || a2.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "A1 is {}x{}, A2 is {}x{}",
                a1.nrows(),
                a1.ncols(),
                a2.nrows(),
                a2.ncols()
            )));
        }
        if n == 0 || out1 >= n || out2 >= n {
            return Err(Error::InvalidArgument(format!(
                "output indices ({out1}, {out2}) out of range for n = {n}"
            )));
        }
        let comm = (&a1 * &a2 - &a2 * &a1).norm();
        let tol = 1e-10 * (1.0 + a1.norm() * a2.norm());
        if comm > tol {
            return Err(Error::InvalidArgument(format!(
                "A1 and A2 do not commute: ‖[A1, A2]‖_F = {comm:e}"
            )));
        }
        Ok(Self { a1, a2, out1, out2 })
    }

    pub fn n(&self) -> usize {
        self.a1.nrows()
    }

    pub fn spectral_radius_a1(&self) -> f64 {
        self.a1
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Output of [`generate_commuting_pair`] together with its ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedPair {
    pub pair: LtiPair,
    /// Shared orthogonal eigenbasis; the first `k_dominant` columns span the
    /// dominant invariant subspace.
    pub basis: DMatrix<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub k_dominant: usize,
}

impl GeneratedPair {
    /// Normalized mean of the dominant basis columns.
    pub fn dominant_x0(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.basis.nrows());
        for c in 0..self.k_dominant {
            x += self.basis.column(c);
        }
        let norm = x.norm();
        x / norm
    }
}

/// `A_i = Q D_i Qᵀ` with a seeded Haar-random `Q`. The first `k_dominant`
/// diagonal entries of each `D_i` are uniform in `[0.9, 0.999]`, the rest
/// uniform in `[−decay, decay]`.
pub fn generate_commuting_pair(n: usize, k_dominant: usize, seed: u64, decay: f64) -> Result<GeneratedPair> {
    if n == 0 || k_dominant == 0 || k_dominant > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k_dominant <= n, got k_dominant = {k_dominant}, n = {n}"
        )));
    }
    if !(decay > 0.0 && decay < 1.0) {
        return Err(Error::InvalidArgument(format!("decay must lie in (0, 1), got {decay}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_orthogonal(n, &mut rng);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if i < k_dominant {
                    rng.random_range(0.9..=0.999)
                } else {
                    rng.random_range(-decay..=decay)
                }
            })
            .collect()
    };
    let d1 = draw(&mut rng);
    let d2 = draw(&mut rng);
    let assemble = |d: &[f64]| {
        let scaled = DMatrix::from_fn(n, n, |r, c| q[(r, c)] * d[c]);
        symmetrize(&(scaled * q.transpose()))
    };
    let pair = LtiPair::checked(assemble(&d1), assemble(&d2), 0, 1.min(n - 1))?;
    Ok(GeneratedPair {
        pair,
        basis: q,
        d1,
        d2,
        k_dominant,
    })
}

/// Seeded standard-normal unit vector.
pub fn random_x0(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0005_eed0_fa11);
    let x = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = x.norm();
    x / norm
}

/// `(A₁ᵀA₁, A₂ᵀA₂, A₁ᵀA₂ + A₂ᵀA₁)`
pub fn build_gram_tuple(p: &LtiPair) -> Result<SymmetricTuple> {
    let h1 = p.a1.tr_mul(&p.a1);
    let h2 = p.a2.tr_mul(&p.a2);
    let b = p.a1.tr_mul(&p.a2);
    let h3 = &b + b.transpose();
    SymmetricTuple::new(vec![h1, h2, h3])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.y1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y1.is_empty()
    }
}

pub fn simulate_full(p: &LtiPair, x0: &DVector<f64>, steps: usize) -> Result<Trajectory> {
    if x0.len() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: x0.len(),
        });
    }
    let mut y1 = Vec::with_capacity(steps + 1);
    let mut y2 = Vec::with_capacity(steps + 1);
    let mut x1 = x0.clone();
    for t in 0..=steps {
        if t > 0 {
            x1 = &p.a1 * &x1;
        }
        let x2 = &p.a2 * &x1;
        y1.push(x1[p.out1]);
        y2.push(x2[p.out2]);
    }
    Ok(Trajectory { y1, y2 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub ar1: DMatrix<f64>,
    pub ar2: DMatrix<f64>,
    /// Row `out1` of `V`.
    pub c1: DVector<f64>,
    /// Row `out2` of `V`.
    pub c2: DVector<f64>,
    pub v: PartialIsometry,
}

pub fn reduce(p: &LtiPair, v: &PartialIsometry) -> Result<ReducedModel> {
    let vm = v.matrix();
    if vm.nrows() != p.n() {
        return Err(Error::ShapeMismatch(format!(
            "V has {} rows, system has n = {}",
            vm.nrows(),
            p.n()
        )));
    }
    Ok(ReducedModel {
        ar1: vm.tr_mul(&(&p.a1 * vm)),
        ar2: vm.tr_mul(&(&p.a2 * vm)),
        c1: vm.row(p.out1).transpose(),
        c2: vm.row(p.out2).transpose(),
        v: v.clone(),
    })
}

/// Simulates the reduced model from `x̂₁(0) = Vᵀ x0`.
pub fn simulate_reduced(m: &ReducedModel, x0: &DVector<f64>, steps: usize) -> Result<Trajectory> {
    let vm = m.v.matrix();
    if x0.len() != vm.nrows() {
        return Err(Error::DimensionMismatch {
            expected: vm.nrows(),
            found: x0.len(),
        });
    }
    let mut y1 = Vec::with_capacity(steps + 1);
    let mut y2 = Vec::with_capacity(steps + 1);
    let mut x1 = vm.tr_mul(x0);
    for t in 0..=steps {
        if t > 0 {
            x1 = &m.ar1 * &x1;
        }
        let x2 = &m.ar2 * &x1;
        y1.push(m.c1.dot(&x1));
        y2.push(m.c2.dot(&x2));
    }
    Ok(Trajectory { y1, y2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelError {
    pub max_abs: f64,
    /// `max_abs / max|a|`, with `0/0 = 0`.
    pub rel_max: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorReport {
    pub y1: ChannelError,
    pub y2: ChannelError,
}

impl ErrorReport {
    pub fn max_rel(&self) -> f64 {
        self.y1.rel_max.max(self.y2.rel_max)
    }
}

fn channel_error(a: &[f64], b: &[f64]) -> ChannelError {
    let mut max_abs: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut sq = 0.0;
    for (x, y) in a.iter().zip(b) {
        let e = (x - y).abs();
        max_abs = max_abs.max(e);
        scale = scale.max(x.abs());
        sq += e * e;
    }
    let rel_max = if max_abs == 0.0 { 0.0 } else { max_abs / scale };
    let rms = if a.is_empty() { 0.0 } else { (sq / a.len() as f64).sqrt() };
    ChannelError { max_abs, rel_max, rms }
}

/// Errors of `b` against the reference `a`, per output channel.
pub fn compare_outputs(a: &Trajectory, b: &Trajectory) -> Result<ErrorReport> {
    if a.y1.len() != b.y1.len() || a.y2.len() != b.y2.len() || a.y1.len() != a.y2.len() {
        return Err(Error::ShapeMismatch(format!(
            "trajectory lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(ErrorReport {
        y1: channel_error(&a.y1, &b.y1),
        y2: channel_error(&a.y2, &b.y2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    #[default]
    Dominant,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub seed: u64,
    pub steps: usize,
    pub selector: Selector,
    pub k_dominant: usize,
    pub decay: f64,
    pub x0: InitialState,
    /// Shift fed to the eigenbasis; zeros when `None`.
    pub lambda: Option<Vec<f64>>,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            n: 400,
            k: 6,
            delta: 1e-5,
            seed: 0,
            steps: 100,
            selector: Selector::Largest,
            k_dominant: 6,
            decay: 0.1,
            x0: InitialState::Dominant,
            lambda: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoOutput {
    pub generated: GeneratedPair,
    pub eigenbasis: EigenbasisResult,
    pub reduced: ReducedModel,
    pub full: Trajectory,
    pub rom: Trajectory,
    pub report: ErrorReport,
}

/// Generate, build the Gram tuple, compute the eigenbasis, reduce and
/// compare both simulations.
pub fn run_demo(cfg: &DemoConfig) -> Result<DemoOutput> {
    let generated = generate_commuting_pair(cfg.n, cfg.k_dominant, cfg.seed, cfg.decay)?;
    let tuple = build_gram_tuple(&generated.pair)?;
    let lambda = LambdaPoint::new(cfg.lambda.clone().unwrap_or_else(|| vec![0.0; tuple.d()]));
    let eigenbasis =
        truncated_joint_eigenbasis(&tuple, &lambda, &EigenbasisOptions::new(cfg.k, cfg.delta, cfg.selector))?;
    let reduced = reduce(&generated.pair, &eigenbasis.v)?;
    let x0 = match cfg.x0 {
        InitialState::Dominant => generated.dominant_x0(),
        InitialState::Random => random_x0(cfg.n, cfg.seed),
    };
    let full = simulate_full(&generated.pair, &x0, cfg.steps)?;
    let rom = simulate_reduced(&reduced, &x0, cfg.steps)?;
    let report = compare_outputs(&full, &rom)?;
    Ok(DemoOutput {
        generated,
        eigenbasis,
        reduced,
        full,
        rom,
        report,
    })
}

impl DemoOutput {
    pub fn trajectories_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# y2(0) uses x2(0) := A2 x1(0)\n");
        out.push_str("t,y1,y2,y1_rom,y2_rom\n");
        for t in 0..self.full.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                t,
                fmt17(self.full.y1[t]),
                fmt17(self.full.y2[t]),
                fmt17(self.rom.y1[t]),
                fmt17(self.rom.y2[t])
            );
        }
        out
    }

    pub fn report_lines(&self) -> String {
        let mut out = String::new();
        let eb = &self.eigenbasis;
        let _ = writeln!(out, "n={}", eb.v.n());
        let _ = writeln!(out, "k={}", eb.v.k());
        let _ = writeln!(out, "orthonormality_error={}", fmt17(eb.v.orthonormality_error()));
        let _ = writeln!(out, "residual_sq={}", fmt17(eb.residual_sq));
        let _ = writeln!(out, "sweeps={}", eb.jointdiag.sweeps);
        let _ = writeln!(out, "converged={}", eb.jointdiag.converged);
        let _ = writeln!(out, "cluster_warning={}", eb.cluster_warning);
        for (name, c) in [("y1", &self.report.y1), ("y2", &self.report.y2)] {
            let _ = writeln!(out, "{name}_max_abs_error={}", fmt17(c.max_abs));
            let _ = writeln!(out, "{name}_rel_max_error={}", fmt17(c.rel_max));
            let _ = writeln!(out, "{name}_rms_error={}", fmt17(c.rms));
        }
        out
    }
}
