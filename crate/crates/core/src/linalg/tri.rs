use super::DenseMatrix;
use crate::error::{Error, Result};

fn check(r: &DenseMatrix, b: &[f64]) -> Result<()> {
    if r.nrows() != r.ncols() || r.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "triangular solve with {}x{} factor and {} right-hand side entries",
            r.nrows(),
            r.ncols(),
            b.len()
        )));
    }
    let scale = (0..r.nrows()).fold(0.0f64, |m, i| m.max(r[(i, i)].abs()));
    for j in 0..r.nrows() {
        let d = r[(j, j)].abs();
        if d == 0.0 || d <= f64::EPSILON * scale * 1e-4 {
            return Err(Error::SingularTriangular(j));
        }
    }
    Ok(())
}

/// Back substitution for `R y = b` with `R` upper triangular.
pub fn tri_upper_solve(r: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check(r, b)?;
    let n = b.len();
    let mut y = b.to_vec();
    for i in (0..n).rev() {
        let row = r.row(i);
        let s: f64 = (i + 1..n).map(|k| row[k] * y[k]).sum();
        y[i] = (y[i] - s) / row[i];
    }
    Ok(y)
}

/// Forward substitution for `R^T y = b` with `R` upper triangular.
pub fn tri_upper_transpose_solve(r: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check(r, b)?;
    let n = b.len();
    let mut y = b.to_vec();
    for i in 0..n {
        let s: f64 = (0..i).map(|k| r[(k, i)] * y[k]).sum();
        y[i] = (y[i] - s) / r[(i, i)];
    }
    Ok(y)
}
