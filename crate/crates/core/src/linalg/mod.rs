//! Dense and sparse matrix primitives shared by every solver.
//!
//! All arithmetic is `f64`. Vectors are plain slices; [`vecops`] holds the
//! handful of BLAS-1 helpers the kernels need.

mod chol;
mod csr;
mod dense;
pub mod mm;
mod qr;
mod tri;
pub mod vecops;

pub use chol::{cond1_estimate_spd, Cholesky};
pub use csr::CsrMatrix;
pub use dense::DenseMatrix;
pub use qr::{dense_solve, householder_qr, householder_qr_pivoted, PivotedQr, QrFactors};
pub use tri::{tri_upper_solve, tri_upper_transpose_solve};

use std::ops::Range;

use crate::error::{Error, Result};

/// Shared contract for the matrix types accepted by the solvers.
///
/// Implementors must be cheap to share across threads; every method is
/// read-only.
pub trait MatrixLike: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `out = A v`, no dimension checks.
    fn apply_into(&self, v: &[f64], out: &mut [f64]);

    /// `out = A^T v`, no dimension checks.
    fn apply_transpose_into(&self, v: &[f64], out: &mut [f64]);

    /// Visit the stored entries of row `i` in increasing column order.
    fn for_each_in_row(&self, i: usize, f: &mut dyn FnMut(usize, f64));

    /// Sorted union of the column indices touched by rows in `rows`.
    fn row_support(&self, rows: Range<usize>) -> Vec<usize> {
        let mut cols = Vec::new();
        for i in rows {
            self.for_each_in_row(i, &mut |j, _| cols.push(j));
        }
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    /// Dense copy of the square diagonal block `A[range, range]`.
    fn diagonal_block(&self, range: Range<usize>) -> DenseMatrix {
        let m = range.len();
        let mut out = DenseMatrix::zeros(m, m);
        for (bi, i) in range.clone().enumerate() {
            self.for_each_in_row(i, &mut |j, v| {
                if range.contains(&j) {
                    out[(bi, j - range.start)] = v;
                }
            });
        }
        out
    }

    fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.nrows(), self.ncols());
        for i in 0..self.nrows() {
            self.for_each_in_row(i, &mut |j, v| out[(i, j)] = v);
        }
        out
    }
}

/// `A v`, checking dimensions.
pub fn spmv<M: MatrixLike + ?Sized>(a: &M, v: &[f64]) -> Result<Vec<f64>> {
    if a.ncols() != v.len() {
        return Err(Error::Dimension(format!("matrix has {} columns, vector has {} entries", a.ncols(), v.len())));
    }
    let mut out = vec![0.0; a.nrows()];
    a.apply_into(v, &mut out);
    Ok(out)
}

/// `A^T v`, checking dimensions.
pub fn transpose_spmv<M: MatrixLike + ?Sized>(a: &M, v: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != v.len() {
        return Err(Error::Dimension(format!("matrix has {} rows, vector has {} entries", a.nrows(), v.len())));
    }
    let mut out = vec![0.0; a.ncols()];
    a.apply_transpose_into(v, &mut out);
    Ok(out)
}

/// Either storage format, for callers that load matrices at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMatrix {
    Dense(DenseMatrix),
    Csr(CsrMatrix),
}

impl AnyMatrix {
    pub fn nnz(&self) -> usize {
        match self {
            AnyMatrix::Dense(d) => d.as_slice().iter().filter(|v| **v != 0.0).count(),
            AnyMatrix::Csr(c) => c.nnz(),
        }
    }
}

impl From<DenseMatrix> for AnyMatrix {
    fn from(m: DenseMatrix) -> Self {
        AnyMatrix::Dense(m)
    }
}

impl From<CsrMatrix> for AnyMatrix {
    fn from(m: CsrMatrix) -> Self {
        AnyMatrix::Csr(m)
    }
}

impl MatrixLike for AnyMatrix {
    fn nrows(&self) -> usize {
        match self {
            AnyMatrix::Dense(m) => m.nrows(),
            AnyMatrix::Csr(m) => m.nrows(),
        }
    }

    fn ncols(&self) -> usize {
        match self {
            AnyMatrix::Dense(m) => m.ncols(),
            AnyMatrix::Csr(m) => m.ncols(),
        }
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            AnyMatrix::Dense(m) => m.apply_into(v, out),
            AnyMatrix::Csr(m) => m.apply_into(v, out),
        }
    }

    fn apply_transpose_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            AnyMatrix::Dense(m) => m.apply_transpose_into(v, out),
            AnyMatrix::Csr(m) => m.apply_transpose_into(v, out),
        }
    }

    fn for_each_in_row(&self, i: usize, f: &mut dyn FnMut(usize, f64)) {
        match self {
            AnyMatrix::Dense(m) => m.for_each_in_row(i, f),
            AnyMatrix::Csr(m) => m.for_each_in_row(i, f),
        }
    }

    fn row_support(&self, rows: Range<usize>) -> Vec<usize> {
        match self {
            AnyMatrix::Dense(m) => m.row_support(rows),
            AnyMatrix::Csr(m) => m.row_support(rows),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag3() -> CsrMatrix {
        CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)],
        )
        .unwrap()
    }

    #[test]
    fn spmv_identity() {
        let i3 = CsrMatrix::identity(3);
        assert_eq!(spmv(&i3, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(transpose_spmv(&i3, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn spmv_stencil_on_constant() {
        assert_eq!(spmv(&tridiag3(), &[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn spmv_small_dense() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(spmv(&a, &[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert_eq!(transpose_spmv(&a, &[1.0, 1.0]).unwrap(), vec![4.0, 6.0]);
        let csr = CsrMatrix::from_dense(&a);
        assert_eq!(spmv(&csr, &[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert_eq!(transpose_spmv(&csr, &[1.0, 1.0]).unwrap(), vec![4.0, 6.0]);
    }

    #[test]
    fn transpose_of_zero_matrix() {
        let z = CsrMatrix::zeros(3, 2);
        assert_eq!(transpose_spmv(&z, &[1.0, 2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_errors() {
        let a = CsrMatrix::identity(3);
        assert!(matches!(spmv(&a, &[1.0]), Err(Error::Dimension(_))));
        assert!(matches!(transpose_spmv(&a, &[1.0, 2.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn support_and_diagonal_block() {
        let a = tridiag3();
        assert_eq!(a.row_support(0..1), vec![0, 1]);
        assert_eq!(a.row_support(1..3), vec![0, 1, 2]);
        let d = a.diagonal_block(1..3);
        assert_eq!(d.as_slice(), &[2.0, -1.0, -1.0, 2.0]);
    }
}
