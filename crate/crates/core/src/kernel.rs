//! The zero-diagonal lattice kernel `A(r, s) = |r - s|^(-n)` on a grid box.
//!
//! Two application paths are provided: an explicit dense matrix, used as
//! the reference, and a zero-padded FFT convolution that exploits the
//! translation invariance of the kernel.

use serde::{Deserialize, Serialize};

use crate::convolution::ConvolutionPlan;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, LatticePoint};
use crate::sum::{self, CompensatedSum};

/// Largest grid stored densely unless the caller overrides it.
pub const DEFAULT_DENSE_LIMIT: usize = 4096;

/// `|x|^(-n)` from the exact squared norm `|x|^2`; zero at the origin.
#[inline]
pub fn kernel_from_dist2(dist2: i64, dimension: usize) -> f64 {
    if dist2 == 0 {
        return 0.0;
    }
    let d2 = dist2 as f64;
    let half = (dimension / 2) as i32;
    if dimension.is_multiple_of(2) {
        1.0 / d2.powi(half)
    } else {
        1.0 / (d2.powi(half) * d2.sqrt())
    }
}

/// Kernel weight of an integer offset; the exponent is the offset's length.
pub fn kernel_value(offset: &[i64]) -> f64 {
    kernel_from_dist2(offset.iter().map(|x| x * x).sum(), offset.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Dense,
    FastConvolution,
}

#[derive(Debug)]
enum Storage {
    Dense(Vec<f64>),
    Fast(ConvolutionPlan),
}

#[derive(Debug)]
pub struct KernelOperator {
    grid: GridSpec,
    storage: Storage,
}

impl KernelOperator {
    /// Dense operator, subject to the default dense limit.
    pub fn dense(grid: GridSpec) -> Result<Self> {
        Self::dense_with_limit(grid, DEFAULT_DENSE_LIMIT)
    }

    pub fn dense_with_limit(grid: GridSpec, limit: usize) -> Result<Self> {
        let len = grid.num_points();
        if len > limit {
            return Err(Error::Capacity { points: len, limit });
        }
        let n = grid.dimension();
        let points: Vec<LatticePoint> = grid.points().collect();
        let mut matrix = vec![0.0; len * len];
        for i in 0..len {
            for j in (i + 1)..len {
                let w = kernel_from_dist2(points[i].dist2(&points[j]), n);
                matrix[i * len + j] = w;
                matrix[j * len + i] = w;
            }
        }
        Ok(Self {
            grid,
            storage: Storage::Dense(matrix),
        })
    }

    pub fn fast(grid: GridSpec) -> Self {
        let plan = ConvolutionPlan::new(grid.dimension(), grid.axis_len(), kernel_value);
        Self {
            grid,
            storage: Storage::Fast(plan),
        }
    }

    /// Fast path with an explicit padded axis length (at least `2*span-1`).
    pub fn fast_with_padding(grid: GridSpec, padded_len: usize) -> Self {
        let plan = ConvolutionPlan::with_padding(
            grid.dimension(),
            grid.axis_len(),
            padded_len,
            kernel_value,
        );
        Self {
            grid,
            storage: Storage::Fast(plan),
        }
    }

    /// Dense when the grid fits under `dense_limit`, otherwise fast.
    pub fn auto(grid: GridSpec, dense_limit: usize) -> Self {
        match Self::dense_with_limit(grid, dense_limit) {
            Ok(op) => op,
            Err(_) => Self::fast(grid),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.num_points()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> Mode {
        match self.storage {
            Storage::Dense(_) => Mode::Dense,
            Storage::Fast(_) => Mode::FastConvolution,
        }
    }

    /// Row-major dense entries, when stored.
    pub fn dense_entries(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense(m) => Some(m),
            Storage::Fast(_) => None,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m[i * self.len() + j],
            Storage::Fast(_) => {
                let p = self.grid.point_of(i).expect("row index in range");
                let q = self.grid.point_of(j).expect("column index in range");
                kernel_from_dist2(p.dist2(&q), self.grid.dimension())
            }
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let len = self.len();
        for actual in [v.len(), out.len()] {
            if actual != len {
                return Err(Error::Dimension {
                    expected: len,
                    actual,
                });
            }
        }
        match &self.storage {
            Storage::Dense(m) => {
                for (row, slot) in m.chunks_exact(len).zip(out.iter_mut()) {
                    *slot = sum::dot(row, v);
                }
            }
            Storage::Fast(plan) => plan.apply(v, out),
        }
        Ok(())
    }

    /// `J(a, b) = aᵀ A b`.
    pub fn quadratic_form(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                actual: a.len(),
            });
        }
        let ab = self.matvec(b)?;
        Ok(sum::dot(a, &ab))
    }
}

/// Sum of kernel weights from `s0` to every other point of the grid.
pub fn row_sum(grid: &GridSpec, s0: &LatticePoint) -> Result<f64> {
    if !grid.contains(s0) {
        return Err(Error::Range(format!("point {s0} lies outside grid {grid}")));
    }
    let n = grid.dimension();
    Ok(grid
        .points()
        .map(|r| kernel_from_dist2(r.dist2(s0), n))
        .collect::<CompensatedSum>()
        .value())
}

/// `Σ_{r≠s} |r-s|^(-n)` over all ordered pairs, via the count of pairs
/// realizing each offset: `Σ_{x≠0} Π_i (span - |x_i|) |x|^(-n)`.
pub fn pair_sum(grid: &GridSpec) -> f64 {
    let n = grid.dimension();
    let span = grid.axis_len() as i64;
    let width = (2 * span - 1) as usize;
    let mut offset = vec![0i64; n];
    let mut acc = CompensatedSum::new();
    for flat in 0..width.pow(n as u32) {
        let mut rem = flat;
        for slot in offset.iter_mut().rev() {
            *slot = (rem % width) as i64 - (span - 1);
            rem /= width;
        }
        let count: i64 = offset.iter().map(|x| span - x.abs()).product();
        acc.add(count as f64 * kernel_value(&offset));
    }
    acc.value()
}
