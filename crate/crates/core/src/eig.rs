//! Dominant eigenpairs by shifted power iteration, deflation for the next
//! eigenvalue, and operator 2-norm estimation.

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelOperator;
use crate::sum;

/// Seed of the fixed start vector used inside deflated iterations.
const DEFLATION_SEED: u64 = 0x5eed_0fde;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    pub shift: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            shift: 1.0,
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub eigenvalue: f64,
    /// Unit 2-norm, scaled so the entry sum is nonnegative.
    pub vector: Vec<f64>,
    /// `‖Av - λv‖₂`.
    pub residual: f64,
    /// Operator applications performed.
    pub iterations: usize,
    pub converged: bool,
}

impl EigenResult {
    pub fn into_result(self, context: impl Into<String>) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                context: context.into(),
                iterations: self.iterations,
                residual: self.residual,
                partial: Some(self.vector),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Largest eigenvalue of `C = AᵀA`.
    pub mu_l: f64,
    /// Second largest eigenvalue of `C`.
    pub mu_l_minus_1: f64,
    pub gap_ratio: f64,
}

/// Entrywise absolute value.
pub fn abs_map(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.abs()).collect()
}

pub fn uniform_start(len: usize) -> Vec<f64> {
    vec![(len as f64).powf(-0.5); len]
}

fn normalize(v: &mut [f64]) -> f64 {
    let s = sum::norm2(v);
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    s
}

fn sign_normalize(v: &mut [f64]) {
    if sum::sum(v.iter().copied()) < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn residual_norm(av: &[f64], v: &[f64], lambda: f64) -> f64 {
    let r: Vec<f64> = av.iter().zip(v).map(|(a, x)| a - lambda * x).collect();
    sum::norm2(&r)
}

/// Power iteration on `A + shift·I` for a symmetric operator given by
/// `apply(v, out)`, reporting the Rayleigh quotient of `A` itself.
///
/// Convergence is declared when `‖Av - λv‖₂ <= tol·max(|λ|, 1)`. A run that
/// exhausts `max_iter` returns `converged = false` with its last iterate.
pub fn power_iteration<F>(
    mut apply: F,
    len: usize,
    opts: &PowerOptions,
    start: Option<&[f64]>,
) -> EigenResult
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut v = match start {
        Some(s) => s.to_vec(),
        None => uniform_start(len),
    };
    assert_eq!(v.len(), len, "start vector length");
    normalize(&mut v);
    let mut av = vec![0.0; len];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for k in 1..=opts.max_iter.max(1) {
        apply(&v, &mut av);
        lambda = sum::dot(&v, &av);
        residual = residual_norm(&av, &v, lambda);
        if residual <= opts.tol * lambda.abs().max(1.0) {
            sign_normalize(&mut v);
            return EigenResult {
                eigenvalue: lambda,
                vector: v,
                residual,
                iterations: k,
                converged: true,
            };
        }
        for (x, a) in v.iter_mut().zip(&av) {
            *x = a + opts.shift * *x;
        }
        if normalize(&mut v) == 0.0 {
            break;
        }
    }
    sign_normalize(&mut v);
    EigenResult {
        eigenvalue: lambda,
        vector: v,
        residual,
        iterations: opts.max_iter,
        converged: false,
    }
}

/// Dominant eigenpair of a kernel operator from the uniform positive start.
pub fn perron_pair(op: &KernelOperator, opts: &PowerOptions) -> EigenResult {
    perron_pair_from(op, opts, None)
}

pub fn perron_pair_from(
    op: &KernelOperator,
    opts: &PowerOptions,
    start: Option<&[f64]>,
) -> EigenResult {
    power_iteration(
        |v, out| op.apply_into(v, out).expect("operator length"),
        op.len(),
        opts,
        start,
    )
}

struct Deflated<'a> {
    op: &'a KernelOperator,
    basis: &'a [f64],
    scratch: Vec<f64>,
}

fn project(basis: &[f64], v: &mut [f64]) {
    let c = sum::dot(basis, v);
    v.iter_mut().zip(basis).for_each(|(x, b)| *x -= c * b);
}

impl Deflated<'_> {
    /// `out = P A P v` with `P = I - ξξᵀ`.
    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        self.scratch.copy_from_slice(v);
        project(self.basis, &mut self.scratch);
        self.op.apply_into(&self.scratch, out).expect("operator length");
        project(self.basis, out);
    }

    fn start(&self) -> Vec<f64> {
        let mut rng = StdRng::seed_from_u64(DEFLATION_SEED);
        let mut v: Vec<f64> = (0..self.op.len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        project(self.basis, &mut v);
        v
    }
}

fn deflated<'a>(op: &'a KernelOperator, perron: &'a EigenResult) -> Result<Deflated<'a>> {
    if !perron.converged {
        return Err(Error::Contract(
            "deflation needs a converged dominant eigenpair".into(),
        ));
    }
    if op.len() < 2 {
        return Err(Error::Domain(
            "a one-point grid has no second eigenvalue".into(),
        ));
    }
    Ok(Deflated {
        op,
        basis: &perron.vector,
        scratch: vec![0.0; op.len()],
    })
}

/// Second largest (algebraic) eigenvalue of a kernel operator, by power
/// iteration on the operator restricted to the orthogonal complement of the
/// Perron vector, shifted by `|λ_1|` so the largest algebraic eigenvalue of
/// the restriction dominates.
pub fn second_eigenvalue(
    op: &KernelOperator,
    perron: &EigenResult,
    tol: f64,
    max_iter: usize,
) -> Result<EigenResult> {
    let mut defl = deflated(op, perron)?;
    let start = defl.start();
    let shift = perron.eigenvalue.abs();
    let opts = PowerOptions {
        shift: 0.0,
        tol,
        max_iter,
    };
    // The shift is applied before the final projection; otherwise rounding
    // in the Perron direction is amplified by `|λ_1|` every step.
    let mut res = power_iteration(
        |v, out| {
            defl.apply(v, out);
            out.iter_mut().zip(v).for_each(|(o, x)| *o += shift * x);
            project(defl.basis, out);
        },
        op.len(),
        &opts,
        Some(&start),
    );
    res.eigenvalue -= shift;
    res.into_result("second eigenvalue")
}

/// Top two eigenvalues of `C = AᵀA = A²`: `μ_L = λ_1²` and `μ_{L-1}`, the
/// largest squared modulus among the remaining eigenvalues of `A`.
pub fn spectral_report(
    op: &KernelOperator,
    perron: &EigenResult,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralReport> {
    let mu_l = perron.eigenvalue * perron.eigenvalue;
    let mut defl = deflated(op, perron)?;
    let start = defl.start();
    let mut mid = vec![0.0; op.len()];
    let opts = PowerOptions {
        shift: 0.0,
        tol,
        max_iter,
    };
    let second = power_iteration(
        |v, out| {
            defl.apply(v, &mut mid);
            defl.apply(&mid, out);
        },
        op.len(),
        &opts,
        Some(&start),
    )
    .into_result("second eigenvalue of AᵀA")?;
    let mu_l_minus_1 = second.eigenvalue.max(0.0);
    Ok(SpectralReport {
        mu_l,
        mu_l_minus_1,
        gap_ratio: mu_l_minus_1 / mu_l,
    })
}

/// `‖A‖₂` from power iteration on `AᵀA`, started from the uniform vector.
pub fn operator_norm<F, G>(
    mut apply: F,
    mut apply_transpose: G,
    len: usize,
    tol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: FnMut(&[f64], &mut [f64]),
    G: FnMut(&[f64], &mut [f64]),
{
    let mut mid = vec![0.0; len];
    let opts = PowerOptions {
        shift: 0.0,
        tol,
        max_iter,
    };
    let res = power_iteration(
        |v, out| {
            apply(v, &mut mid);
            apply_transpose(&mid, out);
        },
        len,
        &opts,
        None,
    )
    .into_result("operator norm")?;
    Ok(res.eigenvalue.max(0.0).sqrt())
}

/// Row-major dense application helpers for small explicit matrices.
pub fn dense_apply(matrix: &[f64], len: usize) -> impl Fn(&[f64], &mut [f64]) + '_ {
    move |v, out| {
        for (row, slot) in matrix.chunks_exact(len).zip(out.iter_mut()) {
            *slot = sum::dot(row, v);
        }
    }
}

pub fn dense_apply_transpose(matrix: &[f64], len: usize) -> impl Fn(&[f64], &mut [f64]) + '_ {
    move |v, out| {
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = sum::sum((0..len).map(|i| matrix[i * len + j] * v[i]));
        }
    }
}
