//! Discrete maximum principle for `u = Au + f` with a nonnegative
//! contraction `A`, and the difference system that certifies monotone decay
//! of the optimizer away from the center of a centered grid.
//!
//! For the optimizer `a` on `{-N..N}^n` and the first axis, the differences
//! `d_r = a_{(r₁-1, r')} - a_{(r₁, r')}` for `1 <= r₁ <= N` satisfy
//!
//! ```text
//! (λ + |2r₁-1|^(-n)) d_r = Σ_{t≠r, 1<=t₁<=N} (|t-r|^(-n) - |t̃-r|^(-n)) d_t + f(r)
//! ```
//!
//! with `t̃ = (1-t₁, t')` and the boundary forcing
//! `f(r) = Σ_{t'} a_{(N,t')} |(N+1,t')-r|^(-n) - a_{(-N,t')} |(-N,t')-r|^(-n)`.
//! Dividing each row by its prefactor gives `d = A d + F` with `A, F >= 0`,
//! and `‖A‖₂ < 1` turns the maximum principle into `d >= 0`.

use serde::{Deserialize, Serialize};

use crate::eig::{self, dense_apply, dense_apply_transpose};
use crate::error::{Error, Result};
use crate::grid::{Convention, GridSpec, Isometry};
use crate::kernel::kernel_value;
use crate::optimizer::OptimizerResult;
use crate::sum;

/// Tolerance used for the operator-norm power iterations in this module.
const NORM_TOL: f64 = 1e-12;
const NORM_MAX_ITER: usize = 100_000;

/// Thresholds applied by [`verify_decay`].
pub const DECAY_DIFF_TOL: f64 = 1e-10;
pub const DECAY_RESIDUAL_TOL: f64 = 1e-8;

/// `u = A u + f` with entrywise nonnegative `A` (row-major) and `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSystem {
    pub size: usize,
    pub matrix: Vec<f64>,
    pub forcing: Vec<f64>,
    /// `‖A‖₂`.
    pub norm_estimate: f64,
}

impl FixedPointSystem {
    pub fn new(size: usize, matrix: Vec<f64>, forcing: Vec<f64>) -> Result<Self> {
        if matrix.len() != size * size {
            return Err(Error::Dimension {
                expected: size * size,
                actual: matrix.len(),
            });
        }
        if forcing.len() != size {
            return Err(Error::Dimension {
                expected: size,
                actual: forcing.len(),
            });
        }
        if let Some(x) = matrix.iter().chain(&forcing).find(|x| !(**x >= 0.0)) {
            return Err(Error::Contract(format!(
                "fixed-point system needs nonnegative entries, found {x}"
            )));
        }
        let norm_estimate = dense_norm(&matrix, size)?;
        Ok(Self {
            size,
            matrix,
            forcing,
            norm_estimate,
        })
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        dense_apply(&self.matrix, self.size)(u, &mut out);
        out
    }

    /// `‖u - (Au + f)‖₂`.
    pub fn residual(&self, u: &[f64]) -> f64 {
        let au = self.apply(u);
        let r: Vec<f64> = u
            .iter()
            .zip(au.iter().zip(&self.forcing))
            .map(|(x, (a, f))| x - a - f)
            .collect();
        sum::norm2(&r)
    }
}

pub fn dense_norm(matrix: &[f64], size: usize) -> Result<f64> {
    if size == 0 {
        return Ok(0.0);
    }
    eig::operator_norm(
        dense_apply(matrix, size),
        dense_apply_transpose(matrix, size),
        size,
        NORM_TOL,
        NORM_MAX_ITER,
    )
}

/// Contraction iteration `u ← Au + f` from `u₀ = f`, stopped once
/// `‖u_{k+1} - u_k‖₂ <= tol·(1 - ‖A‖₂)`.
pub fn solve_fixed_point(sys: &FixedPointSystem, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if !(sys.norm_estimate < 1.0) {
        return Err(Error::Contract(format!(
            "fixed-point iteration needs ‖A‖₂ < 1, got {}",
            sys.norm_estimate
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    let threshold = tol * (1.0 - sys.norm_estimate);
    let mut u = sys.forcing.clone();
    let mut step = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next = sys.apply(&u);
        next.iter_mut().zip(&sys.forcing).for_each(|(x, f)| *x += f);
        let diff: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        step = sum::norm2(&diff);
        u = next;
        if step <= threshold {
            return Ok(u);
        }
    }
    Err(Error::NotConverged {
        context: "fixed-point iteration".into(),
        iterations: max_iter,
        residual: step,
        partial: Some(u),
    })
}

/// The difference system of the optimizer along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySystem {
    /// 1-based axis index.
    pub axis: usize,
    pub grid: GridSpec,
    /// `N (2N+1)^(n-1)`.
    pub size: usize,
    pub matrix: Vec<f64>,
    pub forcing: Vec<f64>,
    pub d: Vec<f64>,
    pub lambda: f64,
    /// `(2N-1)^(-n)`, the smallest row-prefactor addend.
    pub delta_n: f64,
    /// `‖A‖₂`.
    pub norm_estimate: f64,
}

/// Upper half `1 <= r₁ <= N` of a centered grid with the rest free.
struct HalfBox {
    side: i64,
    rest_width: usize,
    size: usize,
}

impl HalfBox {
    fn new(grid: &GridSpec) -> Self {
        let n = grid.dimension();
        let rest_width = grid.axis_len().pow(n as u32 - 1);
        Self {
            side: grid.side() as i64,
            rest_width,
            size: grid.side() * rest_width,
        }
    }

    fn coords(&self, mut idx: usize, out: &mut [i64]) {
        let width = 2 * self.side as usize + 1;
        for slot in out[1..].iter_mut().rev() {
            *slot = (idx % width) as i64 - self.side;
            idx /= width;
        }
        out[0] = idx as i64 + 1;
    }
}

fn distance_weight(a: &[i64], b: &[i64]) -> f64 {
    let offset: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    kernel_value(&offset)
}

/// Builds `d = A d + F` for the 1-based `axis` of a centered-grid optimizer.
/// Axes beyond the first are handled by swapping them into first position,
/// which leaves the optimizer's defining equation unchanged.
pub fn build_decay_system(opt: &OptimizerResult, axis: usize) -> Result<DecaySystem> {
    let grid = opt.grid;
    if grid.convention() != Convention::Centered {
        return Err(Error::Contract(format!(
            "decay system needs a centered grid, got {grid}"
        )));
    }
    let n = grid.dimension();
    if axis == 0 || axis > n {
        return Err(Error::Contract(format!("axis must be in 1..={n}, got {axis}")));
    }
    if opt.vector.len() != grid.num_points() {
        return Err(Error::Dimension {
            expected: grid.num_points(),
            actual: opt.vector.len(),
        });
    }
    let a: Vec<f64> = if axis == 1 {
        opt.vector.clone()
    } else {
        let map = Isometry::swap(n, 0, axis - 1).index_map(&grid);
        map.iter().map(|&j| opt.vector[j]).collect()
    };
    let at = |coords: &[i64]| a[grid.index_unchecked(coords)];

    let half = HalfBox::new(&grid);
    let side = half.side;
    let lambda = opt.lambda;
    let size = half.size;
    let mut matrix = vec![0.0; size * size];
    let mut forcing = vec![0.0; size];
    let mut d = vec![0.0; size];

    let mut r = vec![0i64; n];
    let mut t = vec![0i64; n];
    let mut t_mirror = vec![0i64; n];
    let mut edge = vec![0i64; n];
    let rest_grid = (n > 1).then(|| GridSpec::centered(n - 1, grid.side()).expect("valid subgrid"));
    for i in 0..size {
        half.coords(i, &mut r);
        let prefactor = 1.0 / (lambda + (2.0 * r[0] as f64 - 1.0).abs().powi(-(n as i32)));
        for j in 0..size {
            if i == j {
                continue;
            }
            half.coords(j, &mut t);
            t_mirror.copy_from_slice(&t);
            t_mirror[0] = 1 - t[0];
            matrix[i * size + j] =
                prefactor * (distance_weight(&t, &r) - distance_weight(&t_mirror, &r));
        }

        // Boundary terms at t₁ = N+1 (value a_{(N,t')}) and t₁ = -N.
        let mut f = sum::CompensatedSum::new();
        let mut rest = vec![0i64; n - 1];
        for k in 0..half.rest_width {
            if let Some(g) = &rest_grid {
                g.coords_into(k, &mut rest);
            }
            edge[1..].copy_from_slice(&rest);
            edge[0] = side;
            let a_top = at(&edge);
            edge[0] = -side;
            let a_bottom = at(&edge);
            edge[0] = side + 1;
            f.add(a_top * distance_weight(&edge, &r));
            edge[0] = -side;
            f.add(-a_bottom * distance_weight(&edge, &r));
        }
        forcing[i] = prefactor * f.value();

        let mut below = r.clone();
        below[0] -= 1;
        d[i] = at(&below) - at(&r);
    }

    let norm_estimate = dense_norm(&matrix, size)?;
    Ok(DecaySystem {
        axis,
        grid,
        size,
        matrix,
        forcing,
        d,
        lambda,
        delta_n: (2.0 * side as f64 - 1.0).powi(-(n as i32)),
        norm_estimate,
    })
}

/// Norms along the chain `‖A‖ <= ‖A + D‖ = ‖C‖ <= λ / (λ + δ(N))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormChain {
    pub norm_a: f64,
    pub norm_c: f64,
    pub bound: f64,
}

impl DecaySystem {
    /// `‖d - (A d + F)‖∞`.
    pub fn residual(&self) -> f64 {
        let mut ad = vec![0.0; self.size];
        dense_apply(&self.matrix, self.size)(&self.d, &mut ad);
        self.d
            .iter()
            .zip(ad.iter().zip(&self.forcing))
            .fold(0.0_f64, |m, (x, (a, f))| m.max((x - a - f).abs()))
    }

    /// `λ / (λ + δ(N))`.
    pub fn norm_bound(&self) -> f64 {
        self.lambda / (self.lambda + self.delta_n)
    }

    pub fn fixed_point_system(&self) -> Result<FixedPointSystem> {
        FixedPointSystem::new(self.size, self.matrix.clone(), self.forcing.clone())
    }

    /// `C(r,t) = p(r)|t-r|^(-n)` and `D(r,t) = p(r)|t̃-r|^(-n)` off the
    /// diagonal, so that `A = C - D`.
    pub fn split_matrices(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.dimension();
        let half = HalfBox::new(&self.grid);
        let size = self.size;
        let mut c = vec![0.0; size * size];
        let mut dm = vec![0.0; size * size];
        let mut r = vec![0i64; n];
        let mut t = vec![0i64; n];
        for i in 0..size {
            half.coords(i, &mut r);
            let prefactor = 1.0 / (self.lambda + (2.0 * r[0] as f64 - 1.0).abs().powi(-(n as i32)));
            for j in 0..size {
                if i == j {
                    continue;
                }
                half.coords(j, &mut t);
                c[i * size + j] = prefactor * distance_weight(&t, &r);
                t[0] = 1 - t[0];
                dm[i * size + j] = prefactor * distance_weight(&t, &r);
            }
        }
        (c, dm)
    }

    pub fn norm_chain(&self) -> Result<NormChain> {
        let (c, _) = self.split_matrices();
        Ok(NormChain {
            norm_a: self.norm_estimate,
            norm_c: dense_norm(&c, self.size)?,
            bound: self.norm_bound(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisDecay {
    pub axis: usize,
    /// Smallest first difference on both halves of the axis, signed so that
    /// decay from the center means nonnegative.
    pub min_d: f64,
    #[serde(rename = "min_F")]
    pub min_f: f64,
    #[serde(rename = "opnorm_A")]
    pub opnorm_a: f64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub grid: GridSpec,
    pub lambda: f64,
    pub delta_n: f64,
    pub norm_bound: f64,
    pub axes: Vec<AxisDecay>,
    pub pass: bool,
}

/// Smallest signed first difference along 0-based `axis`: `a(r-e) - a(r)`
/// for `1 <= r_i <= N` and `a(r) - a(r-e)` for `-N+1 <= r_i <= 0`.
pub fn min_first_difference(opt: &OptimizerResult, axis: usize) -> f64 {
    let grid = &opt.grid;
    let mut lo = f64::INFINITY;
    let mut below = vec![0i64; grid.dimension()];
    for (i, p) in grid.points().enumerate() {
        let x = p.coords()[axis];
        if x == grid.axis_min() {
            continue;
        }
        below.copy_from_slice(p.coords());
        below[axis] -= 1;
        let prev = opt.vector[grid.index_unchecked(&below)];
        let diff = if x >= 1 {
            prev - opt.vector[i]
        } else {
            opt.vector[i] - prev
        };
        lo = lo.min(diff);
    }
    lo
}

/// Checks monotone decay of a centered-grid optimizer on every axis, both
/// directly on the vector and through the difference system.
pub fn verify_decay(opt: &OptimizerResult) -> Result<DecayReport> {
    let grid = opt.grid;
    if grid.convention() != Convention::Centered {
        return Err(Error::Contract(format!(
            "decay check needs a centered grid, got {grid}"
        )));
    }
    let mut axes = Vec::with_capacity(grid.dimension());
    let mut delta_n = 0.0;
    let mut norm_bound = 0.0;
    for axis in 1..=grid.dimension() {
        let sys = build_decay_system(opt, axis)?;
        let min_d = min_first_difference(opt, axis - 1);
        let min_f = sys.forcing.iter().copied().fold(f64::INFINITY, f64::min);
        let residual = sys.residual();
        let pass = min_d >= -DECAY_DIFF_TOL
            && min_f >= 0.0
            && sys.norm_estimate < 1.0
            && residual <= DECAY_RESIDUAL_TOL;
        delta_n = sys.delta_n;
        norm_bound = sys.norm_bound();
        axes.push(AxisDecay {
            axis,
            min_d,
            min_f,
            opnorm_a: sys.norm_estimate,
            residual,
            pass,
        });
    }
    Ok(DecayReport {
        grid,
        lambda: opt.lambda,
        delta_n,
        norm_bound,
        pass: axes.iter().all(|a| a.pass),
        axes,
    })
}
