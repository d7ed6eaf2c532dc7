//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Runs without the libtest harness so the report reads top to bottom.

use dhls_core::bounds::BoundsReport;
use dhls_core::maxprinciple::{self, FixedPointSystem, solve_fixed_point, verify_decay};
use dhls_core::optimizer::solve_optimizer;
use dhls_core::verify::{
    check_gap, check_monotone_lambda, check_multi_start, check_sign_lemma, check_symmetry,
    solve_from_random_start,
};
use dhls_core::{GridSpec, KernelOperator, Mode, SolverConfig};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn unit(n: usize, side: usize) -> GridSpec {
    GridSpec::unit(n, side).unwrap()
}

/// Real root of `λ³ - 2.25λ - 1` in `[1, 3]`.
fn cubic_root() -> f64 {
    let f = |x: f64| x * x * x - 2.25 * x - 1.0;
    let (mut lo, mut hi) = (1.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 { hi = mid } else { lo = mid }
    }
    0.5 * (lo + hi)
}

fn exact_small_cases() -> Check {
    let l12 = solve_optimizer(&unit(1, 2), &cfg()).map_err(|e| e.to_string())?.lambda;
    let l22 = solve_optimizer(&unit(2, 2), &cfg()).map_err(|e| e.to_string())?.lambda;
    let l13 = solve_optimizer(&unit(1, 3), &cfg()).map_err(|e| e.to_string())?.lambda;
    let root = cubic_root();
    ensure((l12 - 1.0).abs() <= 1e-12, || format!("λ(1,2) = {l12}"))?;
    ensure((l22 - 2.5).abs() <= 1e-10, || format!("λ(2,2) = {l22}"))?;
    ensure((l13 - root).abs() <= 1e-10, || format!("λ(1,3) = {l13}, root {root}"))?;
    Ok(format!("λ(1,2)={l12:.15} λ(2,2)={l22:.15} λ(1,3)={l13:.15} root={root:.15}"))
}

/// Every (n, N) family member with at most 2000 points.
fn oracle_grids() -> Vec<(usize, usize)> {
    let mut g = Vec::new();
    g.extend((2..=40).chain([64, 128, 256, 512, 1000, 2000]).map(|s| (1, s)));
    g.extend((2..=20).chain([32, 44]).map(|s| (2, s)));
    g.extend((2..=8).chain([10, 12]).map(|s| (3, s)));
    g.extend((2..=6).map(|s| (4, s)));
    g
}

/// Dense oracle: top eigenvalue from the symmetric eigensolver, vector by
/// LU inverse iteration at that eigenvalue.
fn dense_oracle(op: &KernelOperator) -> (f64, Vec<f64>) {
    let len = op.len();
    let m = DMatrix::from_row_slice(len, len, op.dense_entries().unwrap());
    let lambda = m.symmetric_eigenvalues().max();
    let sigma = lambda * (1.0 + 1e-11);
    let lu = (&m - DMatrix::<f64>::identity(len, len) * sigma).lu();
    let mut v = DVector::from_element(len, 1.0);
    for _ in 0..4 {
        v = lu.solve(&v).expect("shifted matrix is invertible");
        v /= v.norm();
    }
    if v.sum() < 0.0 {
        v = -v;
    }
    (lambda, v.iter().copied().collect())
}

fn oracle_equivalence() -> Check {
    let grids = oracle_grids();
    let (mut worst_value, mut worst_vector) = (0.0f64, 0.0f64);
    for &(n, side) in &grids {
        let grid = unit(n, side);
        let opt = solve_optimizer(&grid, &SolverConfig { with_gap: false, ..cfg() })
            .map_err(|e| format!("n={n} N={side}: {e}"))?;
        let (lambda, vector) = dense_oracle(&KernelOperator::dense(grid).unwrap());
        let dv = (opt.lambda - lambda).abs() / lambda;
        let dx = opt
            .vector
            .iter()
            .zip(&vector)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ensure(dv <= 1e-8, || format!("n={n} N={side}: value rel err {dv:e}"))?;
        ensure(dx <= 1e-7, || format!("n={n} N={side}: vector err {dx:e}"))?;
        worst_value = worst_value.max(dv);
        worst_vector = worst_vector.max(dx);
    }
    Ok(format!(
        "{} grids, max rel value err {worst_value:.2e}, max vector err {worst_vector:.2e}",
        grids.len()
    ))
}

fn matvec_agreement() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 1..=3 {
        for side in 1..=8 {
            let grid = unit(n, side);
            let dense = KernelOperator::dense(grid).unwrap();
            let fast = KernelOperator::fast(grid);
            for _ in 0..20 {
                let v: Vec<f64> = (0..grid.num_points()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let a = dense.matvec(&v).unwrap();
                let b = fast.matvec(&v).unwrap();
                let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
                let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale;
                ensure(err <= 1e-10 || grid.num_points() == 1, || {
                    format!("n={n} N={side}: relative diff {err:e}")
                })?;
                if grid.num_points() > 1 {
                    worst = worst.max(err);
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} products, max relative diff {worst:.2e}"))
}

fn bound_sandwich() -> Check {
    let r = BoundsReport::new(&unit(1, 3), None);
    ensure((r.lower_uniform - 5.0 / 3.0).abs() < 1e-14 && r.upper_center == 2.0, || {
        format!("n=1 N=3 bounds {} {}", r.lower_uniform, r.upper_center)
    })?;
    let grids = oracle_grids();
    let mut min_margin = f64::INFINITY;
    for &(n, side) in &grids {
        let grid = unit(n, side);
        let opt = solve_optimizer(&grid, &SolverConfig { with_gap: false, ..cfg() })
            .map_err(|e| e.to_string())?;
        let rep = BoundsReport::new(&grid, Some(opt.lambda));
        ensure(rep.sandwich_holds(), || format!("n={n} N={side}: sandwich fails"))?;
        if side >= 3 {
            let lo = opt.lambda - rep.lower_uniform;
            let hi = rep.upper_center - opt.lambda;
            ensure(lo > 0.0 && hi > 0.0, || format!("n={n} N={side}: not strict ({lo:e}, {hi:e})"))?;
            min_margin = min_margin.min(lo.min(hi));
        }
    }
    Ok(format!(
        "{} grids, smallest strict margin for N>=3 {min_margin:.3e}",
        grids.len()
    ))
}

fn asymptotic_slope() -> Check {
    let lam = |n, side, c: &SolverConfig| -> Result<(f64, Mode), String> {
        let r = solve_optimizer(&unit(n, side), c).map_err(|e| e.to_string())?;
        Ok((r.lambda, r.mode))
    };
    let c = SolverConfig { with_gap: false, ..cfg() };
    let (a, _) = lam(1, 64, &c)?;
    let (b, _) = lam(1, 128, &c)?;
    let s1 = (b - a) / 2f64.ln();
    ensure((s1 - 2.0).abs() <= 0.15 * 2.0, || format!("n=1 slope {s1}"))?;

    let fast = SolverConfig { dense_limit: 256, ..c };
    let (a, _) = lam(2, 16, &fast)?;
    let (b, mode) = lam(2, 32, &fast)?;
    ensure(mode == Mode::FastConvolution, || format!("N=32 ran in {mode:?}"))?;
    let s2 = (b - a) / 2f64.ln();
    let target = 2.0 * std::f64::consts::PI;
    ensure((s2 - target).abs() <= 0.2 * target, || format!("n=2 slope {s2}"))?;
    Ok(format!(
        "n=1 slope(64,128)={s1:.4} (target 2), n=2 slope(16,32)={s2:.4} (target {target:.4}, fast path)"
    ))
}

fn symmetry() -> Check {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (n, max) in [(1, 128), (2, 16), (3, 6)] {
        for side in 2..=max {
            let grid = unit(n, side);
            let opt = solve_from_random_start(&grid, &cfg(), 11 + side as u64)
                .map_err(|e| format!("n={n} N={side}: {e}"))?;
            let rep = check_symmetry(&opt, 1e-8);
            ensure(rep.pass, || format!("n={n} N={side}: deviation {:e}", rep.max_deviation))?;
            worst = worst.max(rep.max_deviation);
            count += 1;
        }
    }
    Ok(format!("{count} grids from random starts, max deviation {worst:.2e}"))
}

fn uniqueness_gap() -> Check {
    let mut worst_ratio = 0.0f64;
    let mut worst_dev = 0.0f64;
    let mut degenerate = 0;
    let mut count = 0;
    for (n, max) in [(1, 32), (2, 8), (3, 4), (4, 3)] {
        for side in 2..=max {
            let grid = unit(n, side);
            let gap = check_gap(&grid, &cfg()).map_err(|e| e.to_string())?;
            if grid.num_points() < 3 {
                ensure(gap.degenerate && gap.pass, || format!("n={n} N={side}: L=2 not flagged"))?;
                degenerate += 1;
                continue;
            }
            ensure(!gap.degenerate && gap.gap_ratio < 1.0 - 1e-8, || {
                format!("n={n} N={side}: gap ratio {}", gap.gap_ratio)
            })?;
            let uniq = check_multi_start(&grid, &cfg(), 7).map_err(|e| e.to_string())?;
            ensure(uniq.max_deviation <= 1e-8, || {
                format!("n={n} N={side}: multi-start deviation {:e}", uniq.max_deviation)
            })?;
            worst_ratio = worst_ratio.max(gap.gap_ratio);
            worst_dev = worst_dev.max(uniq.max_deviation);
            count += 1;
        }
    }
    Ok(format!(
        "{count} grids, max gap ratio {worst_ratio:.4}, max multi-start deviation {worst_dev:.2e}, {degenerate} degenerate L=2"
    ))
}

fn monotonicity() -> Check {
    let mut out = Vec::new();
    for (n, max) in [(1, 16), (2, 6)] {
        let rep = check_monotone_lambda(n, max, &cfg()).map_err(|e| e.to_string())?;
        ensure(rep.strictly_increasing, || format!("n={n}: λ not increasing {:?}", rep.lambdas))?;
        ensure(rep.embedding_max_deviation <= 1e-9, || {
            format!("n={n}: embedding deviation {:e}", rep.embedding_max_deviation)
        })?;
        out.push(format!("n={n} N=2..{max} embedding dev {:.2e}", rep.embedding_max_deviation));
    }
    Ok(out.join(", "))
}

fn monotone_decay() -> Check {
    let (mut min_d, mut min_f, mut max_res, mut max_norm) =
        (f64::INFINITY, f64::INFINITY, 0.0f64, 0.0f64);
    let mut count = 0;
    for (n, max) in [(1, 8), (2, 5), (3, 2)] {
        for side in 1..=max {
            let grid = GridSpec::centered(n, side).unwrap();
            let opt = solve_optimizer(&grid, &cfg()).map_err(|e| e.to_string())?;
            let rep = verify_decay(&opt).map_err(|e| format!("n={n} N={side}: {e}"))?;
            for a in &rep.axes {
                let where_ = || format!("n={n} N={side} axis {}", a.axis);
                ensure(a.min_d >= -1e-10, || format!("{}: min d {:e}", where_(), a.min_d))?;
                ensure(a.min_f >= 0.0, || format!("{}: min F {:e}", where_(), a.min_f))?;
                ensure(a.residual <= 1e-8, || format!("{}: residual {:e}", where_(), a.residual))?;
                ensure(a.opnorm_a < 1.0, || format!("{}: ‖A‖ {}", where_(), a.opnorm_a))?;
                min_d = min_d.min(a.min_d);
                min_f = min_f.min(a.min_f);
                max_res = max_res.max(a.residual);
                max_norm = max_norm.max(a.opnorm_a);
            }
            count += 1;
        }
    }
    Ok(format!(
        "{count} centered grids, min d {min_d:.2e}, min F {min_f:.2e}, max residual {max_res:.2e}, max ‖A‖ {max_norm:.4}"
    ))
}

fn random_system(rng: &mut StdRng, target: f64) -> (usize, Vec<f64>) {
    let size = rng.random_range(1..=40usize);
    let density = rng.random_range(0.2..=1.0);
    let mut m: Vec<f64> = (0..size * size)
        .map(|_| if rng.random_bool(density) { rng.random_range(0.0..1.0) } else { 0.0 })
        .collect();
    if m.iter().all(|&x| x == 0.0) {
        m[0] = 1.0;
    }
    let norm = maxprinciple::dense_norm(&m, size).unwrap();
    m.iter_mut().for_each(|x| *x *= target / norm);
    (size, m)
}

fn lu_solve(size: usize, m: &[f64], f: &[f64]) -> Vec<f64> {
    let a = DMatrix::from_row_slice(size, size, m);
    let lhs = DMatrix::<f64>::identity(size, size) - a;
    lhs.lu().solve(&DVector::from_column_slice(f)).unwrap().iter().copied().collect()
}

fn maximum_principle() -> Check {
    let mut rng = StdRng::seed_from_u64(10);
    let targets = [0.3, 0.9, 0.99];
    let mut worst_rel = 0.0f64;
    let mut min_u = f64::INFINITY;
    for i in 0..200 {
        let (size, m) = random_system(&mut rng, targets[i % 3]);
        let f: Vec<f64> = (0..size).map(|_| rng.random_range(0.0..1.0)).collect();
        let sys = FixedPointSystem::new(size, m.clone(), f.clone()).map_err(|e| e.to_string())?;
        let u = solve_fixed_point(&sys, 1e-13, 1_000_000).map_err(|e| e.to_string())?;
        let exact = lu_solve(size, &m, &f);
        let scale = exact.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
        let rel = u.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
        ensure(lo >= -1e-12, || format!("system {i}: min u {lo:e}"))?;
        ensure(rel <= 1e-8, || format!("system {i}: relative error {rel:e}"))?;
        worst_rel = worst_rel.max(rel);
        min_u = min_u.min(lo);
    }
    let mut min_gain = f64::INFINITY;
    for i in 0..50 {
        let (size, m) = random_system(&mut rng, targets[i % 3]);
        let f2: Vec<f64> = (0..size).map(|_| rng.random_range(0.0..1.0)).collect();
        let f1: Vec<f64> = f2
            .iter()
            .map(|x| x + if rng.random_bool(0.5) { rng.random_range(0.0..1.0) } else { 0.0 })
            .collect();
        let solve = |f: &[f64]| -> Result<Vec<f64>, String> {
            let sys = FixedPointSystem::new(size, m.clone(), f.to_vec()).map_err(|e| e.to_string())?;
            solve_fixed_point(&sys, 1e-13, 1_000_000).map_err(|e| e.to_string())
        };
        let (u1, u2) = (solve(&f1)?, solve(&f2)?);
        let gain = u1.iter().zip(&u2).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
        ensure(gain >= -1e-12, || format!("pair {i}: u1 - u2 reaches {gain:e}"))?;
        min_gain = min_gain.min(gain);
    }
    Ok(format!(
        "200 systems: max rel err {worst_rel:.2e}, min u {min_u:.2e}; 50 pairs: min(u1-u2) {min_gain:.2e}"
    ))
}

fn sign_lemma() -> Check {
    let grids = [(1, 3), (1, 5), (1, 10), (1, 32), (2, 2), (2, 3), (2, 6), (3, 2), (3, 3), (4, 2)];
    let mut min_inc = f64::INFINITY;
    for (i, &(n, side)) in grids.iter().enumerate() {
        let rep = check_sign_lemma(&unit(n, side), 100, 100 + i as u64).map_err(|e| e.to_string())?;
        ensure(rep.pass && rep.samples == 100 && rep.min_increase > 0.0, || {
            format!("n={n} N={side}: min increase {:e}", rep.min_increase)
        })?;
        min_inc = min_inc.min(rep.min_increase);
    }
    Ok(format!("{} grids x 100 samples, min increase {min_inc:.3e}", grids.len()))
}

fn determinism() -> Check {
    let exe = env!("CARGO_BIN_EXE_dhls");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for name in ["a.json", "b.json", "c.json"] {
        let path = dir.path().join(name);
        let status = Command::new(exe)
            .args(["verify", "-n", "2", "-N", "4", "--seed", "42", "--deterministic", "-o"])
            .arg(&path)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.code() == Some(0), || format!("verify exited with {status}"))?;
        outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), || "outputs differ".to_string())?;
    let text = String::from_utf8(outputs[0].clone()).map_err(|e| e.to_string())?;
    ensure(!text.contains("wall_ms"), || "timing leaked into deterministic output".into())?;
    Ok(format!("3 verify runs, {} identical bytes each", outputs[0].len()))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    check: fn() -> Check,
}

fn main() {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "exact small cases", budget: secs(1), check: exact_small_cases },
        Criterion { id: 2, name: "dense oracle equivalence", budget: secs(120), check: oracle_equivalence },
        Criterion { id: 3, name: "dense/fast matvec agreement", budget: secs(30), check: matvec_agreement },
        Criterion { id: 4, name: "bound sandwich", budget: secs(60), check: bound_sandwich },
        Criterion { id: 5, name: "asymptotic slope", budget: secs(120), check: asymptotic_slope },
        Criterion { id: 6, name: "isometry invariance", budget: secs(120), check: symmetry },
        Criterion { id: 7, name: "uniqueness and spectral gap", budget: secs(60), check: uniqueness_gap },
        Criterion { id: 8, name: "monotone lambda and embedding", budget: secs(60), check: monotonicity },
        Criterion { id: 9, name: "monotone decay", budget: secs(120), check: monotone_decay },
        Criterion { id: 10, name: "maximum principle", budget: secs(60), check: maximum_principle },
        Criterion { id: 11, name: "sign lemma", budget: secs(30), check: sign_lemma },
        Criterion { id: 12, name: "byte-identical verify output", budget: secs(120), check: determinism },
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for c in &criteria {
        let started = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(c.check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panic: {msg}"))
            });
        let elapsed = started.elapsed();
        let result = result.and_then(|d| {
            if elapsed <= c.budget {
                Ok(d)
            } else {
                Err(format!("{d}; took {elapsed:.1?}, budget {:?}", c.budget))
            }
        });
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {:>2} {tag} {} [{:.2}s]: {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
