//! Certification checks for the optimizer: symmetry under the box's
//! isometries, the spectral gap behind uniqueness, the sign lemma,
//! monotonicity in `N`, monotone decay, and the bound sandwich.

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

use crate::bounds::BoundsReport;
use crate::eig::{self, abs_map};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kernel::{DEFAULT_DENSE_LIMIT, KernelOperator};
use crate::maxprinciple::verify_decay;
use crate::optimizer::{
    OptimizerResult, SolverConfig, inequality_check, random_positive_start, solve_optimizer,
    solve_optimizer_from, solve_with_operator,
};
use crate::sum;

pub const SYMMETRY_TOL: f64 = 1e-8;
/// Gap strictness margin: `μ_{L-1}/μ_L < 1 - GAP_MARGIN`.
pub const GAP_MARGIN: f64 = 1e-8;
pub const MULTI_START_TOL: f64 = 1e-8;
pub const EMBEDDING_TOL: f64 = 1e-9;
pub const INEQUALITY_SLACK: f64 = 1e-9;
pub const SANDWICH_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub grid: GridSpec,
    pub group_order: usize,
    /// `max_{φ, r} |a_{φ(r)} - a_r|`.
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn check_symmetry(opt: &OptimizerResult, tolerance: f64) -> SymmetryReport {
    let group = opt.grid.isometry_group();
    let max_deviation = group
        .iter()
        .map(|phi| {
            let map = phi.index_map(&opt.grid);
            map.iter()
                .enumerate()
                .map(|(r, &image)| (opt.vector[image] - opt.vector[r]).abs())
                .fold(0.0_f64, f64::max)
        })
        .fold(0.0_f64, f64::max);
    SymmetryReport {
        grid: opt.grid,
        group_order: group.len(),
        max_deviation,
        tolerance,
        pass: max_deviation <= tolerance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub grid: GridSpec,
    pub mu_l: f64,
    pub mu_l_minus_1: f64,
    pub gap_ratio: f64,
    /// Grids with fewer than three points, where `A²` has no strict gap
    /// (`L = 2`) or no second eigenvalue at all (`L = 1`).
    pub degenerate: bool,
    pub pass: bool,
}

pub fn check_gap(grid: &GridSpec, cfg: &SolverConfig) -> Result<GapReport> {
    let op = KernelOperator::auto(*grid, cfg.dense_limit);
    let pair = eig::perron_pair(&op, &cfg.power_options()).into_result("gap check")?;
    if op.len() < 2 {
        return Ok(GapReport {
            grid: *grid,
            mu_l: pair.eigenvalue * pair.eigenvalue,
            mu_l_minus_1: 0.0,
            gap_ratio: 0.0,
            degenerate: true,
            pass: true,
        });
    }
    let rep = eig::spectral_report(&op, &pair, cfg.tol, cfg.max_iter)?;
    let degenerate = op.len() == 2;
    Ok(GapReport {
        grid: *grid,
        mu_l: rep.mu_l,
        mu_l_minus_1: rep.mu_l_minus_1,
        gap_ratio: rep.gap_ratio,
        degenerate,
        pass: degenerate || rep.gap_ratio < 1.0 - GAP_MARGIN,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub grid: GridSpec,
    /// ℓ∞ distance between the optimizers from the uniform and a seeded
    /// random positive start.
    pub max_deviation: f64,
    pub pass: bool,
}

pub fn check_multi_start(grid: &GridSpec, cfg: &SolverConfig, seed: u64) -> Result<UniquenessReport> {
    let cfg = SolverConfig {
        with_gap: false,
        ..*cfg
    };
    let op = KernelOperator::auto(*grid, cfg.dense_limit);
    let a = solve_with_operator(&op, &cfg, None)?;
    let start = random_positive_start(op.len(), seed);
    let b = solve_with_operator(&op, &cfg, Some(&start))?;
    let max_deviation = sum::max_abs_diff(&a.vector, &b.vector);
    Ok(UniquenessReport {
        grid: *grid,
        max_deviation,
        pass: max_deviation <= MULTI_START_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignLemmaReport {
    pub grid: GridSpec,
    pub samples: usize,
    /// Smallest `J(|a|,|b|) - J(a,b)` over the samples.
    pub min_increase: f64,
    /// Largest `|J(-a,-b) - J(a,b)|`.
    pub max_sign_pair_deviation: f64,
    pub pass: bool,
}

fn mixed_sign_unit(rng: &mut StdRng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pos = rng.random_range(0..len);
    let neg = (pos + 1 + rng.random_range(0..len - 1)) % len;
    v[pos] = v[pos].abs().max(1e-3);
    v[neg] = -v[neg].abs().max(1e-3);
    let s = sum::norm2(&v);
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Seeded mixed-sign unit pairs must strictly gain under `|·|`. Needs at
/// least three points: on two points a pair like `a = (+,-)`, `b = (-,+)`
/// has no sign-changing cross term.
pub fn check_sign_lemma(grid: &GridSpec, samples: usize, seed: u64) -> Result<SignLemmaReport> {
    if samples == 0 {
        return Err(Error::Domain("samples must be at least 1".into()));
    }
    let len = grid.num_points();
    if len < 3 {
        return Err(Error::Domain(format!(
            "sign lemma sampling needs at least 3 points, grid {grid} has {len}"
        )));
    }
    let op = KernelOperator::auto(*grid, DEFAULT_DENSE_LIMIT);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut min_increase = f64::INFINITY;
    let mut max_dev = 0.0_f64;
    for _ in 0..samples {
        let a = mixed_sign_unit(&mut rng, len);
        let b = mixed_sign_unit(&mut rng, len);
        let j = op.quadratic_form(&a, &b)?;
        let j_abs = op.quadratic_form(&abs_map(&a), &abs_map(&b))?;
        let neg_a: Vec<f64> = a.iter().map(|x| -x).collect();
        let neg_b: Vec<f64> = b.iter().map(|x| -x).collect();
        let j_neg = op.quadratic_form(&neg_a, &neg_b)?;
        min_increase = min_increase.min(j_abs - j);
        max_dev = max_dev.max((j_neg - j).abs());
    }
    Ok(SignLemmaReport {
        grid: *grid,
        samples,
        min_increase,
        max_sign_pair_deviation: max_dev,
        pass: min_increase > 0.0 && max_dev == 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub n: usize,
    /// `(N, λ_N)` for `N = 2..=N_max` on unit grids.
    pub lambdas: Vec<(usize, f64)>,
    pub strictly_increasing: bool,
    /// Largest `|J_{N+1}((ξ_N, 0)) - λ_N|`.
    pub embedding_max_deviation: f64,
    /// Every padded form is at most `λ_{N+1}`.
    pub embedding_bounded: bool,
    pub pass: bool,
}

/// Zero-pads a vector on the unit grid `{1..N}^n` into `{1..N+1}^n`.
pub fn embed_zero_padded(v: &[f64], from: &GridSpec, to: &GridSpec) -> Vec<f64> {
    let mut out = vec![0.0; to.num_points()];
    for (i, p) in from.points().enumerate() {
        out[to.index_unchecked(p.coords())] = v[i];
    }
    out
}

pub fn check_monotone_lambda(n: usize, n_max: usize, cfg: &SolverConfig) -> Result<MonotoneReport> {
    if n_max < 3 {
        return Err(Error::Domain(format!("N_max must be at least 3, got {n_max}")));
    }
    let cfg = SolverConfig {
        with_gap: false,
        ..*cfg
    };
    let mut opts: Vec<OptimizerResult> = Vec::new();
    for side in 2..=n_max {
        let g = GridSpec::unit(n, side)?;
        let opt = solve_optimizer(&g, &cfg).map_err(|e| match e {
            Error::NotConverged {
                context,
                iterations,
                residual,
                partial,
            } => Error::NotConverged {
                context: format!("monotonicity at N={side}: {context}"),
                iterations,
                residual,
                partial,
            },
            other => other,
        })?;
        opts.push(opt);
    }
    let mut embedding_max_deviation = 0.0_f64;
    let mut embedding_bounded = true;
    for w in opts.windows(2) {
        let (small, big) = (&w[0], &w[1]);
        let padded = embed_zero_padded(&small.vector, &small.grid, &big.grid);
        let op = KernelOperator::auto(big.grid, cfg.dense_limit);
        let j = op.quadratic_form(&padded, &padded)?;
        embedding_max_deviation = embedding_max_deviation.max((j - small.lambda).abs());
        embedding_bounded &= j <= big.lambda + EMBEDDING_TOL;
    }
    let strictly_increasing = opts.windows(2).all(|w| w[0].lambda < w[1].lambda);
    Ok(MonotoneReport {
        n,
        lambdas: opts.iter().map(|o| (o.grid.side(), o.lambda)).collect(),
        strictly_increasing,
        embedding_max_deviation,
        embedding_bounded,
        pass: strictly_increasing
            && embedding_bounded
            && embedding_max_deviation <= EMBEDDING_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationEntry {
    pub id: String,
    pub pass: bool,
    pub status: String,
    pub metrics: BTreeMap<String, f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub n: usize,
    #[serde(rename = "N")]
    pub side: usize,
    pub tol: f64,
    pub seed: u64,
    pub entries: Vec<CertificationEntry>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub solver: SolverConfig,
    pub seed: u64,
    pub sign_samples: usize,
    pub inequality_trials: usize,
    /// Record wall-clock time per entry; off for byte-reproducible output.
    pub record_timing: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            seed: 0,
            sign_samples: 100,
            inequality_trials: 1000,
            record_timing: false,
        }
    }
}

struct Outcome {
    pass: bool,
    status: String,
    metrics: Vec<(&'static str, f64)>,
}

impl Outcome {
    fn new(pass: bool, metrics: Vec<(&'static str, f64)>) -> Self {
        let status = if pass { "pass" } else { "fail" }.to_string();
        Self {
            pass,
            status,
            metrics,
        }
    }
}

fn run_entry(
    id: &str,
    tolerance: f64,
    record_timing: bool,
    check: impl FnOnce() -> Result<Outcome>,
) -> CertificationEntry {
    let started = Instant::now();
    let outcome = check().unwrap_or_else(|e| Outcome {
        pass: false,
        status: format!("error: {e}"),
        metrics: Vec::new(),
    });
    CertificationEntry {
        id: id.to_string(),
        pass: outcome.pass,
        status: outcome.status,
        metrics: outcome
            .metrics
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        tolerance,
        wall_ms: record_timing.then(|| started.elapsed().as_secs_f64() * 1e3),
    }
}

/// Runs every check for dimension `n` and side `N`. Failures and errors
/// are recorded per entry; no check aborts the others.
pub fn certify_all(n: usize, side: usize, opts: &CertifyOptions) -> Result<CertificationReport> {
    let unit = GridSpec::unit(n, side)?;
    let centered = GridSpec::centered(n, side)?;
    let cfg = SolverConfig {
        with_gap: false,
        ..opts.solver
    };
    let timing = opts.record_timing;
    let unit_opt = solve_optimizer(&unit, &cfg);
    let mut entries = Vec::new();

    entries.push(run_entry("symmetry", SYMMETRY_TOL, timing, || {
        let opt = unit_opt.clone()?;
        let rep = check_symmetry(&opt, SYMMETRY_TOL);
        Ok(Outcome::new(
            rep.pass,
            vec![
                ("group_order", rep.group_order as f64),
                ("max_deviation", rep.max_deviation),
            ],
        ))
    }));

    entries.push(run_entry("gap", GAP_MARGIN, timing, || {
        let rep = check_gap(&unit, &cfg)?;
        let mut out = Outcome::new(
            rep.pass,
            vec![
                ("mu_L", rep.mu_l),
                ("mu_L_minus_1", rep.mu_l_minus_1),
                ("gap_ratio", rep.gap_ratio),
            ],
        );
        if rep.degenerate {
            out.status = format!("known degenerate L={}", unit.num_points());
        }
        Ok(out)
    }));

    entries.push(run_entry("uniqueness", MULTI_START_TOL, timing, || {
        let rep = check_multi_start(&unit, &cfg, opts.seed)?;
        Ok(Outcome::new(rep.pass, vec![("max_deviation", rep.max_deviation)]))
    }));

    entries.push(run_entry("sign_lemma", 0.0, timing, || {
        if unit.num_points() < 3 {
            let mut out = Outcome::new(true, vec![]);
            out.status = format!("skipped: L={} has no strictly mixed pairs", unit.num_points());
            return Ok(out);
        }
        let rep = check_sign_lemma(&unit, opts.sign_samples, opts.seed)?;
        Ok(Outcome::new(
            rep.pass,
            vec![
                ("samples", rep.samples as f64),
                ("min_increase", rep.min_increase),
                ("max_sign_pair_deviation", rep.max_sign_pair_deviation),
            ],
        ))
    }));

    entries.push(run_entry("inequality", INEQUALITY_SLACK, timing, || {
        let opt = unit_opt.clone()?;
        let worst = inequality_check(&opt, opts.inequality_trials, opts.seed)?;
        Ok(Outcome::new(
            worst <= opt.lambda + INEQUALITY_SLACK,
            vec![("lambda", opt.lambda), ("worst_ratio", worst)],
        ))
    }));

    entries.push(run_entry("sandwich", SANDWICH_MARGIN, timing, || {
        let opt = unit_opt.clone()?;
        let rep = BoundsReport::new(&unit, Some(opt.lambda));
        let margin = rep.sandwich_margin().unwrap_or(0.0);
        // Equalities are allowed below N = 3 (e.g. N = 2, where all bounds are 1).
        let pass = rep.sandwich_holds() && (side < 3 || margin > SANDWICH_MARGIN);
        Ok(Outcome::new(
            pass,
            vec![
                ("lower_uniform", rep.lower_uniform),
                ("lambda", opt.lambda),
                ("upper_center", rep.upper_center),
                ("margin", margin),
            ],
        ))
    }));

    entries.push(run_entry("monotonicity", EMBEDDING_TOL, timing, || {
        let rep = check_monotone_lambda(n, side.max(3), &cfg)?;
        Ok(Outcome::new(
            rep.pass,
            vec![
                ("n_max", side.max(3) as f64),
                ("embedding_max_deviation", rep.embedding_max_deviation),
                ("strictly_increasing", f64::from(u8::from(rep.strictly_increasing))),
            ],
        ))
    }));

    entries.push(run_entry("decay", crate::maxprinciple::DECAY_DIFF_TOL, timing, || {
        let opt = solve_optimizer(&centered, &cfg)?;
        let rep = verify_decay(&opt)?;
        let worst = |f: fn(&crate::maxprinciple::AxisDecay) -> f64, max: bool| {
            rep.axes.iter().map(f).fold(
                if max { f64::NEG_INFINITY } else { f64::INFINITY },
                |acc, x| if max { acc.max(x) } else { acc.min(x) },
            )
        };
        Ok(Outcome::new(
            rep.pass,
            vec![
                ("min_d", worst(|a| a.min_d, false)),
                ("min_F", worst(|a| a.min_f, false)),
                ("opnorm_A", worst(|a| a.opnorm_a, true)),
                ("residual", worst(|a| a.residual, true)),
                ("norm_bound", rep.norm_bound),
            ],
        ))
    }));

    Ok(CertificationReport {
        n,
        side,
        tol: opts.solver.tol,
        seed: opts.seed,
        pass: entries.iter().all(|e| e.pass),
        entries,
    })
}

/// Solves from a seeded random positive start; asymmetric starts expose
/// how symmetry deviation tracks the solver tolerance.
pub fn solve_from_random_start(grid: &GridSpec, cfg: &SolverConfig, seed: u64) -> Result<OptimizerResult> {
    solve_optimizer_from(grid, cfg, &random_positive_start(grid.num_points(), seed))
}
