mod common;

use approj::ap::project_onto_span;
use approj::baselines::{block_jacobi_solve, gmres_solve, BlockJacobiConfig, GmresConfig};
use approj::linalg::spmv;
use approj::problems::{Func1D, ProblemSpec};
use approj::solvers::{apap_inner_cycle, apap_solve, pap_solve, residual, ApProjector, ApVersion};
use approj::{CsrMatrix, SolverConfig, Termination};
use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn small_cfg(bs: usize) -> SolverConfig {
    SolverConfig { block_size: bs, inner_m: 12, delta: vec![3, 6, 9, 12], ..SolverConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Every PAP step strictly reduces the error until convergence.
    #[test]
    fn pap_error_strictly_decreases(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = 10;
        let a = random_well_conditioned(&mut r, n);
        let x = random_vec(&mut r, n);
        let b = spmv(&a, &x).unwrap();
        let cfg = SolverConfig { tol: 1e-10, max_outer: 5000, block_size: 2, ..SolverConfig::default() };
        let rep = pap_solve(&a, &b, &cfg, Some(&x)).unwrap();
        prop_assert!(rep.converged(), "{}", rep.termination);
        let errs = rep.error_history.unwrap();
        for w in errs.windows(2) {
            prop_assert!(w[1] < w[0] || w[1] < 1e-12, "{} !< {}", w[1], w[0]);
        }
    }

    /// The inner-loop ledger reproduces x^T x_i, and the running residual
    /// stays consistent with the recomputed one.
    #[test]
    fn ledger_identity_and_residual_consistency(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(6..=16);
        let a = random_well_conditioned(&mut r, n);
        let x = random_vec(&mut r, n);
        let b = spmv(&a, &x).unwrap();
        let cfg = SolverConfig { inner_m: 8, delta: (1..=8).collect(), block_size: 2, ..SolverConfig::default() };
        let proj = ApProjector::new(&a, &cfg).unwrap();
        let cyc = apap_inner_cycle(&a, &proj, &b, &cfg, 0.0).unwrap();
        prop_assert_eq!(cyc.snapshots.len(), cyc.ledger_values.len());
        for (xi, li) in cyc.snapshots.iter().zip(&cyc.ledger_values) {
            let want = dotv(&x, xi);
            prop_assert!((li - want).abs() <= 1e-8 * norm(&x) * norm(&x), "{li} vs {want}");
        }
        prop_assert!((cyc.ledger.total() - cyc.ledger.l_running).abs() <= 1e-10 * norm(&x).powi(2));
        let last = cyc.snapshots.last().unwrap();
        let true_r: Vec<f64> = b.iter().zip(spmv(&a, last).unwrap()).map(|(b, ax)| b - ax).collect();
        prop_assert!(dist(&true_r, &cyc.residual) <= 1e-10 * norm(&b));

        // The combined correction is the best approximation of x in the
        // snapshot span.
        let span = project_onto_span(&cyc.snapshots, &cyc.ledger_values, 1e-10).unwrap();
        let h = DMatrix::from_columns(&cyc.snapshots.iter().map(|s| na_vec(s)).collect::<Vec<_>>());
        let oracle = dense_projection(&h, &x);
        prop_assert!(dist(&span.v, &oracle) <= 1e-6 * norm(&x), "{}", dist(&span.v, &oracle));
        prop_assert!(norm(&span.v) <= norm(&x) * (1.0 + 1e-8));
    }

    /// The running APAP residual tracks the recomputed one.
    #[test]
    fn apap_running_residual_matches_true(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(8..=20);
        let a = random_well_conditioned(&mut r, n);
        let x = random_vec(&mut r, n);
        let b = spmv(&a, &x).unwrap();
        let rep = apap_solve(&a, &b, &small_cfg(3), Some(&x)).unwrap();
        prop_assert!(rep.converged(), "{}", rep.termination);
        for (run, tru) in rep.residual_history.iter().zip(&rep.true_residual_history) {
            prop_assert!((run - tru).abs() <= 1e-10, "{run} vs {tru}");
        }
        prop_assert!(residual(&a, &rep.solution, &b) <= 1e-7 * (1.0 + 1e-6));
    }

    /// Full GMRES (no restart) solves small systems in at most n steps.
    #[test]
    fn full_gmres_finite_termination(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=20);
        let a = random_well_conditioned(&mut r, n);
        let x = random_vec(&mut r, n);
        let b = spmv(&a, &x).unwrap();
        let cfg = GmresConfig { restart_m: n, max_outer: 1, tol: 1e-10 };
        let rep = gmres_solve(&a, &b, &cfg, None).unwrap();
        prop_assert!(rep.converged(), "{}", rep.termination);
        prop_assert!(rep.inner_iters_total <= n);
        prop_assert!(residual(&a, &rep.solution, &b) <= 1e-9);
    }
}

#[test]
fn identity_is_solved_in_one_step() {
    let a = CsrMatrix::identity(30);
    let x: Vec<f64> = (0..30).map(|i| 1.0 + i as f64).collect();
    for version in [ApVersion::V1, ApVersion::V2] {
        let cfg = SolverConfig { block_size: 4, ap_version: version, ..SolverConfig::default() };
        let pap = pap_solve(&a, &x, &cfg, Some(&x)).unwrap();
        assert!(pap.converged());
        assert_eq!(pap.inner_iters_total, 1, "{version:?}");
        let apap = apap_solve(&a, &x, &cfg, Some(&x)).unwrap();
        assert!(apap.converged());
        assert_eq!(apap.outer_iters, 1);
        assert!(dist(&apap.solution, &x) < 1e-12);
    }
}

#[test]
fn zero_rhs_returns_zero() {
    let a = CsrMatrix::identity(5);
    let rep = apap_solve(&a, &[0.0; 5], &SolverConfig::default(), None).unwrap();
    assert!(rep.converged());
    assert_eq!(rep.solution, vec![0.0; 5]);
}

#[test]
fn invalid_config_is_rejected() {
    let a = CsrMatrix::identity(5);
    let b = [1.0; 5];
    for cfg in [
        SolverConfig { tol: 0.0, ..SolverConfig::default() },
        SolverConfig { block_size: 0, ..SolverConfig::default() },
        SolverConfig { delta: vec![0], ..SolverConfig::default() },
        SolverConfig { delta: vec![70], ..SolverConfig::default() },
    ] {
        assert!(pap_solve(&a, &b, &cfg, None).is_err() || apap_solve(&a, &b, &cfg, None).is_err());
    }
    assert!(pap_solve(&a, &[1.0; 4], &SolverConfig::default(), None).is_err());
}

#[test]
fn apap_needs_far_fewer_ap_calls_than_pap() {
    let p = ProblemSpec::tridiag(-1.0, 2.0, -1.0, 60, Func1D::Parabolic).build().unwrap();
    let cfg = SolverConfig { tol: 1e-6, max_outer: 200_000, block_size: 10, ..SolverConfig::default() };
    let pap = pap_solve(&p.a, &p.b, &cfg, Some(&p.x_exact)).unwrap();
    let apap_cfg = SolverConfig { sweeps_per_projection: 3, ..cfg.clone() };
    let apap = apap_solve(&p.a, &p.b, &apap_cfg, Some(&p.x_exact)).unwrap();
    assert!(
        pap.converged() && apap.converged(),
        "{} {} {} {}",
        pap.termination,
        pap.final_residual(),
        apap.termination,
        apap.final_residual()
    );
    assert!(
        apap.inner_iters_total * 10 <= pap.inner_iters_total,
        "APAP {} vs PAP {}",
        apap.inner_iters_total,
        pap.inner_iters_total
    );
}

#[test]
fn ap_v1_and_v2_both_converge_in_apap() {
    let p = ProblemSpec::tridiag(-1.0, 2.0, -1.0, 100, Func1D::Sine).build().unwrap();
    for version in [ApVersion::V1, ApVersion::V2] {
        let cfg = SolverConfig { block_size: 10, ap_version: version, tol: 1e-8, ..SolverConfig::default() };
        let rep = apap_solve(&p.a, &p.b, &cfg, Some(&p.x_exact)).unwrap();
        assert!(rep.converged(), "{version:?}: {}", rep.termination);
        assert!(rep.error_history.unwrap().last().unwrap() < &1e-5);
    }
}

#[test]
fn block_jacobi_converges_on_diagonally_dominant_system() {
    let p = ProblemSpec::tridiag(-1.0, 4.0, -1.0, 60, Func1D::Parabolic).build().unwrap();
    let cfg = BlockJacobiConfig { block_size: 6, tol: 1e-10, ..BlockJacobiConfig::default() };
    let rep = block_jacobi_solve(&p.a, &p.b, &cfg, Some(&p.x_exact)).unwrap();
    assert!(rep.converged());
    assert!(dist(&rep.solution, &p.x_exact) < 1e-8 * norm(&p.x_exact));
}

#[test]
fn block_jacobi_reports_singular_block_as_breakdown() {
    let a = CsrMatrix::from_triplets(4, 4, &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)]).unwrap();
    let cfg = BlockJacobiConfig { block_size: 1, ..BlockJacobiConfig::default() };
    let rep = block_jacobi_solve(&a, &[1.0; 4], &cfg, None).unwrap();
    assert!(matches!(rep.termination, Termination::Breakdown(_)));
}
