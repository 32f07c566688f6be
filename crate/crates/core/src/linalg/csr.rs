use std::ops::Range;

use super::{DenseMatrix, MatrixLike};
use crate::error::{Error, Result};

/// Compressed sparse row matrix in canonical form: column indices strictly
/// increasing within each row and no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Validates and wraps raw CSR arrays.
    pub fn new(rows: usize, cols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != rows + 1 {
            return Err(Error::InvalidMatrix(format!("row_ptr has length {}, expected {}", row_ptr.len(), rows + 1)));
        }
        if row_ptr[0] != 0 || row_ptr[rows] != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::InvalidMatrix("inconsistent row_ptr / nnz".into()));
        }
        for i in 0..rows {
            let (s, e) = (row_ptr[i], row_ptr[i + 1]);
            if s > e {
                return Err(Error::InvalidMatrix(format!("row_ptr decreases at row {i}")));
            }
            let idx = &col_idx[s..e];
            if idx.iter().any(|&j| j >= cols) {
                return Err(Error::InvalidMatrix(format!("column index out of range in row {i}")));
            }
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!("column indices not strictly increasing in row {i}")));
            }
            if values[s..e].iter().any(|v| *v == 0.0 || !v.is_finite()) {
                return Err(Error::InvalidMatrix(format!("explicit zero or non-finite in row {i}")));
            }
        }
        Ok(Self { rows, cols, row_ptr, col_idx, values })
    }

    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// resulting zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        if let Some(&(i, j, _)) = sorted.iter().find(|(i, j, _)| *i >= rows || *j >= cols) {
            return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) outside {rows}x{cols}")));
        }
        if sorted.iter().any(|t| !t.2.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut k = 0;
        while k < sorted.len() {
            let (i, j, mut v) = sorted[k];
            k += 1;
            while k < sorted.len() && sorted[k].0 == i && sorted[k].1 == j {
                v += sorted[k].2;
                k += 1;
            }
            if v != 0.0 {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
            }
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { rows, cols, row_ptr, col_idx, values })
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(d.nrows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..d.nrows() {
            for (j, v) in d.row(i).iter().enumerate() {
                if *v != 0.0 {
                    col_idx.push(j);
                    values.push(*v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { rows: d.nrows(), cols: d.ncols(), row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self { rows: n, cols: n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, row_ptr: vec![0; rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Iterator over `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.triplets().all(|(i, j, v)| self.get(j, i) == v)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |k| v[k])
    }
}

impl MatrixLike for CsrMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (c, vals) = self.row(i);
            *o = c.iter().zip(vals).map(|(&j, a)| a * v[j]).sum();
        }
    }

    fn apply_transpose_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, vi) in v.iter().enumerate() {
            let (c, vals) = self.row(i);
            for (&j, a) in c.iter().zip(vals) {
                out[j] += a * vi;
            }
        }
    }

    fn for_each_in_row(&self, i: usize, f: &mut dyn FnMut(usize, f64)) {
        let (c, vals) = self.row(i);
        for (&j, &a) in c.iter().zip(vals) {
            f(j, a);
        }
    }

    fn row_support(&self, rows: Range<usize>) -> Vec<usize> {
        if rows.is_empty() {
            return Vec::new();
        }
        let mut cols = self.col_idx[self.row_ptr[rows.start]..self.row_ptr[rows.end]].to_vec();
        cols.sort_unstable();
        cols.dedup();
        cols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_canonicalised() {
        let m = CsrMatrix::from_triplets(2, 3, &[(1, 2, 1.0), (0, 1, 2.0), (1, 2, -1.0), (0, 0, 3.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.row_ptr(), &[0, 2, 2]);
        assert_eq!(m.col_idx(), &[0, 1]);
        assert_eq!(m.get(1, 2), 0.0);
    }

    #[test]
    fn validation_rejects_non_canonical() {
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![0, 1], vec![0], vec![0.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![0, 1], vec![3], vec![1.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![0, 2], vec![1.0, 5.0]).is_ok());
    }

    #[test]
    fn dense_round_trip() {
        let d = DenseMatrix::from_rows(&[vec![0.0, 1.5], vec![-2.0, 0.0]]).unwrap();
        let c = CsrMatrix::from_dense(&d);
        assert_eq!(c.nnz(), 2);
        assert_eq!(c.to_dense(), d);
    }
}
