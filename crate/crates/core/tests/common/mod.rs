#![allow(dead_code)]

use approj::linalg::{spmv, AnyMatrix, DenseMatrix, MatrixLike};
use approj::problems::{exact_solution_1d, gen_hilbert, gen_poisson5, gen_tridiag, Func1D};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Dense `rows x cols` with entries in [-1, 1).
pub fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::new(rows, cols, random_vec(rng, rows * cols)).unwrap()
}

/// Random square matrix shifted to be comfortably nonsingular.
pub fn random_well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let mut a = random_dense(rng, n, n);
    for i in 0..n {
        a[(i, i)] += 2.0 + n as f64 / 4.0;
    }
    a
}

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.nrows(), m.ncols(), m.as_slice())
}

pub fn na_vec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Orthogonal projection of `x` onto the column span of `w` (full column
/// rank assumed), through nalgebra's QR.
pub fn dense_projection(w: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let q = w.clone().qr().q();
    let x = na_vec(x);
    let p = &q * (q.transpose() * x);
    p.iter().copied().collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A test system with known solution and a block size suited to it.
pub struct Case {
    pub name: String,
    pub a: AnyMatrix,
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    pub block_size: usize,
    pub overlapped: bool,
}

/// Draws one of the test problem families (all with n <= 200).
pub fn random_case(seed: u64) -> Case {
    let mut r = rng(seed);
    let family = r.gen_range(0..5);
    let overlapped = r.gen_bool(0.5);
    let (name, a, x, bs): (String, AnyMatrix, Vec<f64>, usize) = match family {
        0 => {
            let n = r.gen_range(4..=20);
            let a = random_well_conditioned(&mut r, n);
            let x = random_vec(&mut r, n);
            (format!("random dense n={n}"), a.into(), x, r.gen_range(1..=n / 2))
        }
        1 => {
            let n = r.gen_range(10..=200);
            let x = exact_solution_1d(n, Func1D::Parabolic);
            (
                format!("tridiag(-1,2,-1) n={n}"),
                gen_tridiag(-1.0, 2.0, -1.0, n).unwrap().into(),
                x,
                r.gen_range(2..=n / 4),
            )
        }
        2 => {
            let n = r.gen_range(10..=200);
            let x = exact_solution_1d(n, Func1D::Sine);
            (
                format!("tridiag(-1,2,-1.05) n={n}"),
                gen_tridiag(-1.0, 2.0, -1.05, n).unwrap().into(),
                x,
                r.gen_range(2..=n / 4),
            )
        }
        3 => {
            let (nx, ny) = (r.gen_range(3..=12), r.gen_range(3..=12));
            let x = random_vec(&mut r, nx * ny);
            (format!("poisson {nx}x{ny}"), gen_poisson5(nx, ny).unwrap().into(), x, r.gen_range(2..=nx * ny / 3))
        }
        _ => {
            let n = r.gen_range(4..=8);
            let x = random_vec(&mut r, n);
            (format!("hilbert n={n}"), gen_hilbert(n).unwrap().into(), x, r.gen_range(1..=2))
        }
    };
    let b = spmv(&a, &x).unwrap();
    assert_eq!(a.nrows(), x.len());
    Case { name, a, x, b, block_size: bs, overlapped }
}
