//! Two-dimensional slices through `λ ↦ μ(λ)` with Lipschitz pruning.
//!
//! Cells are visited in row-major order. When a computed value `v` exceeds
//! the cutoff, every cell `q` that has not been computed and lies within
//! distance `v − cutoff` of the current point gets the lower bound
//! `v − ‖λ(q) − λ(p)‖` and is never evaluated.
//!
//! The parallel schedule evaluates a batch of upcoming unpruned cells
//! concurrently and then replays the batch in row-major order, discarding
//! any value whose cell the sequential replay prunes first. Since the
//! kernel is a pure function, the result is bitwise identical to
//! [`Execution::Sequential`].

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::fmt17;
use crate::quadps::{mu_quadratic, Kernel};
use crate::tuple::{LambdaPoint, SymmetricTuple};

/// `count` equally spaced samples from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridRange {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidArgument(format!("range needs finite min < max, got {min}:{max}")));
        }
        if count < 2 {
            return Err(Error::InvalidArgument(format!("range count must be >= 2, got {count}")));
        }
        Ok(Self { min, max, count })
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + (self.max - self.min) * (i as f64) / ((self.count - 1) as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub axis_i: usize,
    pub axis_j: usize,
    /// Values of the coordinates that do not vary.
    pub base: LambdaPoint,
    pub range_i: GridRange,
    pub range_j: GridRange,
    pub cutoff: Option<f64>,
}

impl SliceSpec {
    pub fn new(
        axis_i: usize,
        axis_j: usize,
        base: LambdaPoint,
        range_i: GridRange,
        range_j: GridRange,
        cutoff: Option<f64>,
    ) -> Result<Self> {
        if axis_i == axis_j {
            return Err(Error::InvalidArgument(format!("slice axes must differ, got {axis_i} twice")));
        }
        if axis_i >= base.len() || axis_j >= base.len() {
            return Err(Error::InvalidArgument(format!(
                "slice axes ({axis_i}, {axis_j}) out of range for d = {}",
                base.len()
            )));
        }
        if let Some(c) = cutoff {
            if c.is_nan() || c < 0.0 {
                return Err(Error::InvalidArgument(format!("cutoff must be nonnegative, got {c}")));
            }
        }
        Ok(Self {
            axis_i,
            axis_j,
            base,
            range_i,
            range_j,
            cutoff,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.range_i.count, self.range_j.count)
    }

    pub fn point(&self, a: usize, b: usize) -> LambdaPoint {
        let mut coords = self.base.coords().to_vec();
        coords[self.axis_i] = self.range_i.value(a);
        coords[self.axis_j] = self.range_j.value(b);
        coords.into()
    }

    fn validate(&self, t: &SymmetricTuple) -> Result<()> {
        if self.base.len() != t.d() {
            return Err(Error::LengthMismatch {
                expected: t.d(),
                found: self.base.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Computed,
    PrunedAboveCutoff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceResult {
    pub spec: SliceSpec,
    /// Row-major, `count_i × count_j`. Pruned cells hold their lower bound.
    pub values: Vec<f64>,
    pub status: Vec<CellStatus>,
}

impl SliceResult {
    pub fn shape(&self) -> (usize, usize) {
        self.spec.shape()
    }

    pub fn value(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.spec.range_j.count + b]
    }

    pub fn status(&self, a: usize, b: usize) -> CellStatus {
        self.status[a * self.spec.range_j.count + b]
    }

    pub fn pruned_count(&self) -> usize {
        self.status.iter().filter(|s| **s == CellStatus::PrunedAboveCutoff).count()
    }

    /// Comment header, then one line per grid row; pruned cells as `>LB`.
    pub fn to_csv(&self) -> String {
        let (rows, cols) = self.shape();
        let mut out = String::new();
        let cutoff = self.spec.cutoff.map_or_else(|| "none".to_string(), fmt17);
        let _ = writeln!(
            out,
            "# axis_i={} axis_j={} cutoff={}",
            self.spec.axis_i, self.spec.axis_j, cutoff
        );
        for a in 0..rows {
            for b in 0..cols {
                if b > 0 {
                    out.push(',');
                }
                if self.status(a, b) == CellStatus::PrunedAboveCutoff {
                    out.push('>');
                }
                out.push_str(&fmt17(self.value(a, b)));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential without the `parallel` feature.
    #[default]
    Parallel,
}

pub fn scan_slice(t: &SymmetricTuple, spec: &SliceSpec) -> Result<SliceResult> {
    scan_slice_with(t, spec, Kernel::default(), Execution::default())
}

pub fn scan_slice_with(
    t: &SymmetricTuple,
    spec: &SliceSpec,
    kernel: Kernel,
    execution: Execution,
) -> Result<SliceResult> {
    spec.validate(t)?;
    let (rows, cols) = spec.shape();
    let total = rows * cols;
    let mut values = vec![f64::NAN; total];
    let mut status: Vec<Option<CellStatus>> = vec![None; total];

    let eval = |cell: usize| -> Result<f64> {
        let (a, b) = (cell / cols, cell % cols);
        mu_quadratic(t, &spec.point(a, b), kernel)
            .map(|r| r.mu)
            .map_err(|e| Error::GridPoint {
                i: a,
                j: b,
                source: Box::new(e),
            })
    };

    let batch_size = match execution {
        Execution::Sequential => 1,
        Execution::Parallel => parallel_batch_size(cols),
    };

    let mut cursor = 0;
    while cursor < total {
        let mut batch = Vec::with_capacity(batch_size);
        while cursor < total && batch.len() < batch_size {
            if status[cursor].is_none() {
                batch.push(cursor);
            }
            cursor += 1;
        }
        let results = evaluate(&batch, &eval, execution);
        for (cell, result) in batch.into_iter().zip(results) {
            // Pruned by an earlier cell of this batch during replay.
            if status[cell].is_some() {
                continue;
            }
            let v = result?;
            values[cell] = v;
            status[cell] = Some(CellStatus::Computed);
            if let Some(cutoff) = spec.cutoff {
                if v > cutoff {
                    prune_around(spec, cell, v, cutoff, &mut values, &mut status);
                }
            }
        }
    }

    Ok(SliceResult {
        spec: spec.clone(),
        values,
        status: status
            .into_iter()
            .map(|s| s.expect("every cell is computed or pruned"))
            .collect(),
    })
}

fn parallel_batch_size(cols: usize) -> usize {
    #[cfg(feature = "parallel")]
    {
        cols.max(2 * rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = cols;
        1
    }
}

fn evaluate<F>(batch: &[usize], eval: &F, execution: Execution) -> Vec<Result<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel && batch.len() > 1 {
        use rayon::prelude::*;
        return batch.par_iter().map(|&c| eval(c)).collect();
    }
    let _ = execution;
    batch.iter().map(|&c| eval(c)).collect()
}

fn prune_around(
    spec: &SliceSpec,
    cell: usize,
    v: f64,
    cutoff: f64,
    values: &mut [f64],
    status: &mut [Option<CellStatus>],
) {
    let (rows, cols) = spec.shape();
    let (a, b) = (cell / cols, cell % cols);
    let radius = v - cutoff;
    let step_i = (spec.range_i.max - spec.range_i.min) / ((rows - 1) as f64);
    let step_j = (spec.range_j.max - spec.range_j.min) / ((cols - 1) as f64);
    // Index-space bounding box of the ball, widened by one for rounding.
    let reach_i = ((radius / step_i).floor() as usize).saturating_add(1);
    let reach_j = ((radius / step_j).floor() as usize).saturating_add(1);
    let here = spec.point(a, b);
    for qa in a.saturating_sub(reach_i)..=(a.saturating_add(reach_i)).min(rows - 1) {
        for qb in b.saturating_sub(reach_j)..=(b.saturating_add(reach_j)).min(cols - 1) {
            let q = qa * cols + qb;
            if status[q] == Some(CellStatus::Computed) {
                continue;
            }
            let dist = here.distance(&spec.point(qa, qb));
            if dist < radius {
                let bound = v - dist;
                if status[q].is_none() || bound > values[q] {
                    values[q] = bound;
                }
                status[q] = Some(CellStatus::PrunedAboveCutoff);
            }
        }
    }
}
