mod common;

use approj::linalg::{dense_solve, spmv, Cholesky, MatrixLike};
use approj::problems::{
    exact_solution_1d, gen_hilbert, gen_poisson5, gen_tridiag, grid_shape, Func1D, ProblemKind, ProblemSpec,
    SolutionKind,
};
use approj::solvers::rel_error;
use common::*;
use proptest::prelude::*;

#[test]
fn hilbert_determinant_of_order_three() {
    let h = to_na(&gen_hilbert(3).unwrap());
    assert!((h.determinant() - 1.0 / 2160.0).abs() < 1e-15);
}

#[test]
fn hilbert_is_spd_up_to_twelve() {
    for n in 1..=12 {
        let h = gen_hilbert(n).unwrap();
        assert!(h.is_symmetric(0.0));
        Cholesky::factor(&h).unwrap_or_else(|e| panic!("n = {n}: {e}"));
    }
}

#[test]
fn poisson_is_symmetric_positive_definite() {
    for (nx, ny) in [(3, 3), (4, 6), (10, 10)] {
        let a = gen_poisson5(nx, ny).unwrap();
        assert!(a.is_symmetric());
        assert_eq!(a.nnz(), 5 * nx * ny - 2 * nx - 2 * ny);
        let eig = to_na(&a.to_dense()).symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|l| *l > 0.0));
    }
}

#[test]
fn tridiag_structure() {
    let a = gen_tridiag(-1.0, 2.0, -1.05, 100).unwrap();
    assert_eq!(a.nnz(), 298);
    assert_eq!(a.get(3, 2), -1.0);
    assert_eq!(a.get(3, 3), 2.0);
    assert_eq!(a.get(3, 4), -1.05);
    assert!(gen_tridiag(1.0, 1.0, 1.0, 0).is_err());
}

#[test]
fn manufactured_solution_samples_interior_grid() {
    let x = exact_solution_1d(9, Func1D::Parabolic);
    let t: f64 = 0.1;
    assert!((x[0] - t * (1.0 - t) * (3.0 + t).exp()).abs() < 1e-14);
    assert_eq!(grid_shape(100), (10, 10));
    let (gx, gy) = grid_shape(12);
    assert_eq!(gx * gy, 12);
}

#[test]
fn hilbert_twenty_defeats_dense_solve() {
    let p = ProblemSpec::hilbert(20).build().unwrap();
    let y = dense_solve(&p.a.to_dense(), &p.b).unwrap();
    assert!(rel_error(&y, &p.x_exact) > 1e-2);
}

#[test]
fn custom_solution_length_is_checked() {
    let spec = ProblemSpec {
        kind: ProblemKind::Tridiag { lo: -1.0, di: 2.0, up: -1.0, n: 5 },
        solution: SolutionKind::Custom(vec![1.0; 4]),
    };
    assert!(spec.build().is_err());
}

#[test]
fn problem_spec_serde_round_trip() {
    for spec in
        [ProblemSpec::tridiag(-1.0, 2.0, -1.05, 50, Func1D::Sine), ProblemSpec::poisson(4, 5), ProblemSpec::hilbert(7)]
    {
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ProblemSpec>(&text).unwrap(), spec);
    }
}

proptest! {
    /// b = A x_exact and a dense direct solve recovers x_exact on the
    /// well-conditioned families.
    #[test]
    fn manufactured_round_trip(n in 3usize..=40, nx in 2usize..=6, ny in 2usize..=6, sine in any::<bool>()) {
        let f = if sine { Func1D::Sine } else { Func1D::Parabolic };
        for spec in [ProblemSpec::tridiag(-1.0, 2.0, -1.0, n, f), ProblemSpec::tridiag(-1.0, 2.0, -1.05, n, f), ProblemSpec::poisson(nx, ny)] {
            let p = spec.build().unwrap();
            prop_assert_eq!(&spmv(&p.a, &p.x_exact).unwrap(), &p.b);
            let y = dense_solve(&p.a.to_dense(), &p.b).unwrap();
            prop_assert!(rel_error(&y, &p.x_exact) <= 1e-8);
            prop_assert_eq!(p.a.nrows(), p.x_exact.len());
        }
    }
}
