//! Two-sided bounds on `λ_N`, the sphere-area constant of its logarithmic
//! growth, and `N` sweeps with doubling-slope estimates.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kernel::{pair_sum, row_sum};
use crate::optimizer::{SolverConfig, solve_optimizer};

/// Surface area `|S^{n-1}| = 2 π^{n/2} / Γ(n/2)` of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("sphere area needs n >= 1".into()));
    }
    // Γ(n/2) by the recurrence Γ(x+1) = xΓ(x) from Γ(1) = 1 or Γ(1/2) = √π.
    let (mut gamma, mut x) = if n.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = n as f64 / 2.0;
    while x < target {
        gamma *= x;
        x += 1.0;
    }
    Ok(2.0 * PI.powf(target) / gamma)
}

/// Value of the inequality at the normalized uniform vector:
/// `L⁻¹ Σ_{r≠s} |r-s|^(-n)`.
pub fn lower_bound_uniform(grid: &GridSpec) -> f64 {
    pair_sum(grid) / grid.num_points() as f64
}

/// Largest row sum of the kernel matrix. The row sum is maximal at the
/// central point: along each axis, the window of offsets reachable from a
/// point is an interval containing 0, and the kernel is symmetric and
/// decreasing in each coordinate's magnitude.
pub fn upper_bound_center(grid: &GridSpec) -> f64 {
    row_sum(grid, &grid.central_point()).expect("central point lies in the grid")
}

/// Closed-form majorant `|S^{n-1}| (ln N + ½ ln 2)`, reported for comparison.
pub fn integral_upper_estimate(grid: &GridSpec) -> f64 {
    sphere_area(grid.dimension()).expect("dimension >= 1")
        * ((grid.side() as f64).ln() + 0.5 * 2f64.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub grid: GridSpec,
    pub lower_uniform: f64,
    pub upper_center: f64,
    pub integral_estimate: f64,
    pub lambda: Option<f64>,
    pub sphere_area: f64,
    pub log_n: f64,
}


/// Relative slack for the bound sandwich. At `N = 2` all three quantities
/// coincide and the computed `λ` can sit an ulp outside.
pub const SANDWICH_ROUNDING: f64 = 1e-12;

fn within_bounds(lower: f64, lambda: f64, upper: f64) -> bool {
    let slack = SANDWICH_ROUNDING * lambda.abs().max(1.0);
    lower - slack <= lambda && lambda <= upper + slack
}

impl BoundsReport {
    pub fn new(grid: &GridSpec, lambda: Option<f64>) -> Self {
        Self {
            grid: *grid,
            lower_uniform: lower_bound_uniform(grid),
            upper_center: upper_bound_center(grid),
            integral_estimate: integral_upper_estimate(grid),
            lambda,
            sphere_area: sphere_area(grid.dimension()).expect("dimension >= 1"),
            log_n: (grid.side() as f64).ln(),
        }
    }

    /// `lower <= λ <= upper` up to [`SANDWICH_ROUNDING`] relative slack;
    /// vacuously true without `λ`.
    pub fn sandwich_holds(&self) -> bool {
        self.lambda
            .is_none_or(|l| within_bounds(self.lower_uniform, l, self.upper_center))
    }

    /// Smaller of the two gaps `λ - lower` and `upper - λ`.
    pub fn sandwich_margin(&self) -> Option<f64> {
        self.lambda
            .map(|l| (l - self.lower_uniform).min(self.upper_center - l))
    }

    /// `λ_N - |S^{n-1}| ln N`.
    pub fn intercept(&self) -> Option<f64> {
        self.lambda.map(|l| l - self.sphere_area * self.log_n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    #[serde(rename = "N")]
    pub side: usize,
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEntry {
    pub n1: usize,
    pub n2: usize,
    pub slope: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Slopes between consecutive rows.
    pub slopes: Vec<SlopeEntry>,
}

impl SweepTable {
    pub fn from_rows(mut rows: Vec<SweepRow>) -> Self {
        rows.sort_by_key(|r| (r.n, r.side));
        let slopes = rows
            .windows(2)
            .filter(|w| w[0].n == w[1].n)
            .map(|w| SlopeEntry {
                n1: w[0].side,
                n2: w[1].side,
                slope: slope_between(&w[0], &w[1]),
            })
            .collect();
        Self { rows, slopes }
    }

    pub fn row(&self, side: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.side == side)
    }

    /// `λ` strictly increasing down the rows of each dimension.
    pub fn is_monotone(&self) -> bool {
        self.rows
            .windows(2)
            .filter(|w| w[0].n == w[1].n)
            .all(|w| w[0].lambda < w[1].lambda)
    }
}

fn slope_between(a: &SweepRow, b: &SweepRow) -> f64 {
    (b.lambda - a.lambda) / ((b.side as f64).ln() - (a.side as f64).ln())
}

/// `(λ_{N2} - λ_{N1}) / (ln N2 - ln N1)`.
pub fn slope_estimate(table: &SweepTable, n1: usize, n2: usize) -> Result<f64> {
    if n1 >= n2 {
        return Err(Error::Domain(format!("slope needs N1 < N2, got {n1}, {n2}")));
    }
    let lookup = |side| {
        table
            .row(side)
            .ok_or_else(|| Error::Lookup(format!("no sweep row for N={side}")))
    };
    Ok(slope_between(lookup(n1)?, lookup(n2)?))
}

/// One sweep row on the unit grid `{1..N}^n`.
pub fn sweep_row(n: usize, side: usize, cfg: &SolverConfig) -> Result<SweepRow> {
    let grid = GridSpec::unit(n, side)?;
    let started = Instant::now();
    let cfg = SolverConfig {
        with_gap: false,
        ..*cfg
    };
    let opt = solve_optimizer(&grid, &cfg).map_err(|e| match e {
        Error::NotConverged {
            context,
            iterations,
            residual,
            partial,
        } => Error::NotConverged {
            context: format!("sweep row N={side}: {context}"),
            iterations,
            residual,
            partial,
        },
        other => other,
    })?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let row = SweepRow {
        n,
        side,
        lambda: opt.lambda,
        lower: lower_bound_uniform(&grid),
        upper: upper_bound_center(&grid),
        iterations: opt.iterations,
        wall_ms,
    };
    if !within_bounds(row.lower, row.lambda, row.upper) {
        return Err(Error::Contract(format!(
            "bound sandwich violated at N={side}: {} <= {} <= {}",
            row.lower, row.lambda, row.upper
        )));
    }
    Ok(row)
}

/// Solves every `N` in `sides` (strictly increasing) and tabulates bounds
/// and consecutive slopes.
pub fn sweep(n: usize, sides: &[usize], cfg: &SolverConfig) -> Result<SweepTable> {
    if sides.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("N values must be strictly increasing".into()));
    }
    let rows = sides
        .iter()
        .map(|&side| sweep_row(n, side, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::from_rows(rows))
}
