use dhls_core::bounds::{self, sweep};
use dhls_core::maxprinciple::verify_decay;
use dhls_core::optimizer::{el_check, inequality_check, solve_optimizer};
use dhls_core::verify::{CertifyOptions, certify_all};
use dhls_core::{Error, GridSpec, KernelOperator, Mode, SolverConfig};

#[test]
fn dense_and_fast_solves_agree() {
    let grid = GridSpec::unit(2, 12).unwrap();
    let dense = solve_optimizer(&grid, &SolverConfig::default()).unwrap();
    let fast = solve_optimizer(
        &grid,
        &SolverConfig {
            dense_limit: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(dense.mode, Mode::Dense);
    assert_eq!(fast.mode, Mode::FastConvolution);
    assert!((dense.lambda - fast.lambda).abs() < 1e-10 * dense.lambda);
    let dev = dense
        .vector
        .iter()
        .zip(&fast.vector)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(dev < 1e-8, "{dev}");
}

#[test]
fn optimizer_satisfies_euler_lagrange_and_bounds() {
    for (n, side) in [(1, 17), (2, 7), (3, 4)] {
        let grid = GridSpec::unit(n, side).unwrap();
        let opt = solve_optimizer(&grid, &SolverConfig::default()).unwrap();
        let [r1, r2] = el_check(&opt).unwrap();
        assert!(r1 <= 1e-9 * opt.lambda && r2 <= 1e-9 * opt.lambda);
        assert!(opt.min_entry > 0.0);
        assert!(opt.gap_ratio.unwrap() < 1.0);
        let worst = inequality_check(&opt, 200, 9).unwrap();
        assert!(worst <= opt.lambda + 1e-9);
        assert!(bounds::lower_bound_uniform(&grid) < opt.lambda);
        assert!(opt.lambda < bounds::upper_bound_center(&grid));
    }
}

#[test]
fn centered_optimizer_decays() {
    let grid = GridSpec::centered(2, 4).unwrap();
    let opt = solve_optimizer(&grid, &SolverConfig::default()).unwrap();
    let rep = verify_decay(&opt).unwrap();
    assert!(rep.pass);
    assert_eq!(rep.axes.len(), 2);
    assert!((rep.axes[0].min_d - rep.axes[1].min_d).abs() < 1e-8);

    let unit = solve_optimizer(&GridSpec::unit(2, 4).unwrap(), &SolverConfig::default()).unwrap();
    assert!(matches!(verify_decay(&unit), Err(Error::Contract(_))));
}

#[test]
fn sweep_slopes_approach_sphere_area() {
    let table = sweep(1, &[16, 32, 64], &SolverConfig::default()).unwrap();
    assert!(table.is_monotone());
    let slopes: Vec<f64> = table.slopes.iter().map(|s| s.slope).collect();
    assert!(slopes.iter().all(|s| (s - 2.0).abs() < 0.3), "{slopes:?}");
    assert!(sweep(1, &[4, 3], &SolverConfig::default()).is_err());
}

#[test]
fn certification_passes_on_moderate_grids() {
    for (n, side) in [(1, 8), (2, 4), (3, 2)] {
        let rep = certify_all(n, side, &CertifyOptions::default()).unwrap();
        let failed: Vec<_> = rep.entries.iter().filter(|e| !e.pass).map(|e| &e.id).collect();
        assert!(rep.pass, "n={n} N={side} failed {failed:?}");
        assert_eq!(rep.entries.len(), 8);
        assert!(rep.entries.iter().all(|e| e.wall_ms.is_none()));
    }
}

#[test]
fn operator_errors_are_typed() {
    let grid = GridSpec::unit(2, 3).unwrap();
    let op = KernelOperator::dense(grid).unwrap();
    assert!(matches!(op.matvec(&[1.0; 4]), Err(Error::Dimension { expected: 9, actual: 4 })));
    assert!(matches!(
        KernelOperator::dense_with_limit(grid, 4),
        Err(Error::Capacity { points: 9, limit: 4 })
    ));
    assert!(GridSpec::unit(5, 2).is_err());
    assert!(GridSpec::unit(1, 0).is_err());
}
