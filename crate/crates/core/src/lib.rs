//! Quadratic joint pseudospectra and truncated joint approximate eigenbases
//! for tuples of real symmetric matrices, with an application to
//! projection-based model order reduction of discrete-time systems.
//!
//! - [`quadps`]: `μ(λ) = min_{‖v‖=1} sqrt(Σ_j ‖X_j v − λ_j v‖²)` by two kernels.
//! - [`slice`]: 2D grid scans of `μ` with Lipschitz pruning.
//! - [`jointdiag`]: Jacobi-sweep joint diagonalization.
//! - [`eigenbasis`]: the truncated joint eigenbasis pipeline.
//! - [`mor`]: reduction and simulation of commuting two-stage LTI systems.
//!
//! The `parallel` feature (default) runs slice scans and batch evaluations
//! on rayon; without it every path is sequential.

pub mod cli;
pub mod eigenbasis;
pub mod error;
pub mod jointdiag;
pub mod linalg;
pub mod mor;
pub mod mtx;
pub mod quadps;
pub mod slice;
pub mod tuple;

pub use eigenbasis::{build_l, residual, truncated_joint_eigenbasis, EigenbasisOptions, EigenbasisResult, Selector};
pub use error::{Error, Result};
pub use jointdiag::{joint_diagonalize, off_norm, rotation_angle, JointDiagResult};
pub use quadps::{build_m, build_q, in_pseudospectrum, mu_quadratic, Kernel, MuResult};
pub use slice::{scan_slice, scan_slice_with, CellStatus, Execution, GridRange, SliceResult, SliceSpec};
pub use tuple::{load_tuple, symmetrize, LambdaPoint, PartialIsometry, SymmetricTuple};
