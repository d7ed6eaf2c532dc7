//! The optimizer of the discrete critical HLS inequality: the sharp constant
//! `λ_N` and the unit positive vector `a = b` attaining equality.
//!
//! Both come out of the Perron eigenpair of the kernel operator; the
//! variational problem is never attacked with a general-purpose optimizer.

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::eig::{self, PowerOptions};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kernel::{DEFAULT_DENSE_LIMIT, KernelOperator, Mode};
use crate::sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub shift: f64,
    /// Grids with more points than this use the FFT convolution path.
    pub dense_limit: usize,
    /// Also estimate the spectral gap of `AᵀA` (one more deflated solve).
    pub with_gap: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            shift: 1.0,
            dense_limit: DEFAULT_DENSE_LIMIT,
            with_gap: true,
        }
    }
}

impl SolverConfig {
    pub fn power_options(&self) -> PowerOptions {
        PowerOptions {
            shift: self.shift,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.shift >= 0.0) {
            return Err(Error::Domain(format!(
                "shift must be nonnegative, got {}",
                self.shift
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub grid: GridSpec,
    /// The sharp constant `λ_N`.
    pub lambda: f64,
    /// Unit-norm Perron vector, linear-index order.
    pub vector: Vec<f64>,
    /// `‖A a - λ a‖₂`.
    pub el_residual: f64,
    /// `μ_{L-1} / μ_L` for `C = AᵀA`; absent on a one-point grid or when
    /// not requested.
    pub gap_ratio: Option<f64>,
    pub iterations: usize,
    /// Smallest optimizer entry, the positivity margin.
    pub min_entry: f64,
    pub mode: Mode,
}

pub fn solve_optimizer(grid: &GridSpec, cfg: &SolverConfig) -> Result<OptimizerResult> {
    let op = KernelOperator::auto(*grid, cfg.dense_limit);
    solve_with_operator(&op, cfg, None)
}

/// As [`solve_optimizer`], from an explicit start vector.
pub fn solve_optimizer_from(
    grid: &GridSpec,
    cfg: &SolverConfig,
    start: &[f64],
) -> Result<OptimizerResult> {
    let op = KernelOperator::auto(*grid, cfg.dense_limit);
    solve_with_operator(&op, cfg, Some(start))
}

pub fn solve_with_operator(
    op: &KernelOperator,
    cfg: &SolverConfig,
    start: Option<&[f64]>,
) -> Result<OptimizerResult> {
    cfg.validate()?;
    if let Some(s) = start {
        if s.len() != op.len() {
            return Err(Error::Dimension {
                expected: op.len(),
                actual: s.len(),
            });
        }
    }
    let pair = eig::perron_pair_from(op, &cfg.power_options(), start)
        .into_result(format!("optimizer on {}", op.grid()))?;
    let gap_ratio = if cfg.with_gap && op.len() >= 2 {
        Some(eig::spectral_report(op, &pair, cfg.tol, cfg.max_iter)?.gap_ratio)
    } else {
        None
    };
    let min_entry = pair.vector.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OptimizerResult {
        grid: *op.grid(),
        lambda: pair.eigenvalue,
        el_residual: pair.residual,
        vector: pair.vector,
        gap_ratio,
        iterations: pair.iterations,
        min_entry,
        mode: op.mode(),
    })
}

/// Seeded random start with entries in `(0.05, 1]`.
pub fn random_positive_start(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(0.05..=1.0)).collect()
}

/// Both Euler-Lagrange residuals `‖λa - Ab‖₂` and `‖λb - Aa‖₂` with `a = b`.
pub fn el_check(res: &OptimizerResult) -> Result<[f64; 2]> {
    let op = KernelOperator::auto(res.grid, DEFAULT_DENSE_LIMIT);
    let r = residual_with(&op, &res.vector, res.lambda)?;
    Ok([r, r])
}

/// `‖A v - λ v‖₂`.
pub fn residual_with(op: &KernelOperator, v: &[f64], lambda: f64) -> Result<f64> {
    let av = op.matvec(v)?;
    let diff: Vec<f64> = av.iter().zip(v).map(|(a, x)| a - lambda * x).collect();
    Ok(sum::norm2(&diff))
}

/// `J(a, b) / (‖a‖₂ ‖b‖₂)`.
pub fn ratio(op: &KernelOperator, a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(op.quadratic_form(a, b)? / (sum::norm2(a) * sum::norm2(b)))
}

/// Largest inequality ratio over `trials` seeded random unit pairs. Every
/// ratio must stay at or below `λ_N`.
pub fn inequality_check(res: &OptimizerResult, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let op = KernelOperator::auto(res.grid, DEFAULT_DENSE_LIMIT);
    let len = op.len();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let a: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        worst = worst.max(ratio(&op, &a, &b)?);
    }
    Ok(worst)
}
