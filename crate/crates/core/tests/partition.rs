mod common;

use approj::linalg::{spmv, DenseMatrix, MatrixLike};
use approj::partition::{factorize_blocks, make_partition, project_onto_block};
use approj::problems::gen_tridiag;
use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn tridiag_block_reconstruction() {
    let a = gen_tridiag(-1.0, 2.0, -1.0, 100).unwrap();
    for overlapped in [false, true] {
        let p = make_partition(100, 20, overlapped).unwrap();
        let bf = factorize_blocks(&a, &p).unwrap();
        for f in bf.blocks() {
            let q = f.q_full(100);
            let at = a.to_dense().rows_slice(f.rows()).transpose();
            let rec = q.matmul(f.r()).unwrap().sub(&at).unwrap().frobenius_norm() / at.frobenius_norm();
            assert!(rec <= 1e-12);
            // Banded rows touch only block + 2 columns.
            assert_eq!(f.support().len(), f.len() + usize::from(f.rows().start > 0) + usize::from(f.rows().end < 100));
        }
    }
}

#[test]
fn random_block_projection_matches_normal_equations() {
    let mut r = rng(5);
    let block = random_dense(&mut r, 3, 6);
    let x = random_vec(&mut r, 6);
    let bf = factorize_blocks(&block, &make_partition(3, 3, false).unwrap()).unwrap();
    let rhs = spmv(&block, &x).unwrap();
    let (p, c) = project_onto_block(&bf, 0, &rhs).unwrap();
    let a = to_na(&block);
    let oracle = a.transpose() * (&a * a.transpose()).try_inverse().unwrap() * (&a * na_vec(&x));
    for (u, v) in p.iter().zip(oracle.iter()) {
        assert!((u - v).abs() < 1e-10);
    }
    assert!((c - dotv(&x, &p)).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_coverage(n in 1usize..300, bs_frac in 0.0f64..1.0, overlapped: bool) {
        let bs = 1 + ((n - 1) as f64 * bs_frac) as usize;
        let p = make_partition(n, bs, overlapped).unwrap();
        let mut count = vec![0usize; n];
        for r in p.blocks() {
            prop_assert!(r.len() <= bs && !r.is_empty());
            for i in r.clone() {
                count[i] += 1;
            }
        }
        prop_assert!(count.iter().all(|&c| c >= 1));
        if !overlapped {
            prop_assert!(count.iter().all(|&c| c == 1));
        } else {
            for w in p.blocks().windows(2) {
                prop_assert_eq!(w[1].start - w[0].start, bs - bs / 2);
                if w[1].end - w[1].start == bs {
                    prop_assert_eq!(w[0].end - w[1].start, bs / 2);
                }
            }
        }
    }

    #[test]
    fn projection_matches_normal_equations(seed in any::<u64>(), n in 2usize..=20, bs in 1usize..=6) {
        let mut r = rng(seed);
        let bs = bs.min(n);
        let a = random_well_conditioned(&mut r, n);
        let x = random_vec(&mut r, n);
        let b = spmv(&a, &x).unwrap();
        let p = make_partition(n, bs, true).unwrap();
        let bf = factorize_blocks(&a, &p).unwrap();
        for (i, range) in p.blocks().iter().enumerate() {
            let (proj, c) = project_onto_block(&bf, i, &b[range.clone()]).unwrap();
            let ai: DMatrix<f64> = to_na(&DenseMatrix::from_rows(
                &range.clone().map(|k| a.row(k).to_vec()).collect::<Vec<_>>(),
            ).unwrap());
            let oracle = ai.transpose() * (&ai * ai.transpose()).try_inverse().unwrap() * (&ai * na_vec(&x));
            for (u, v) in proj.iter().zip(oracle.iter()) {
                prop_assert!((u - v).abs() <= 1e-10 * (1.0 + norm(&x)));
            }
            prop_assert!((c - dotv(&proj, &proj)).abs() <= 1e-10 * (1.0 + c));
            // Maximality: the projection beats every single row direction.
            let lhs = dotv(&x, &proj) / norm(&proj).max(1e-300);
            for k in range.clone() {
                let row = a.row(k);
                prop_assert!(lhs >= (dotv(row, &x)).abs() / norm(row) - 1e-10);
            }
        }
    }
}
