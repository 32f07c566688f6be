use super::DenseMatrix;
use crate::error::{Error, Result};

/// Cholesky factor `G = L L^T` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    /// Factors `g`, reading only its lower triangle.
    pub fn factor(g: &DenseMatrix) -> Result<Self> {
        let n = g.nrows();
        if g.ncols() != n {
            return Err(Error::Dimension(format!("Cholesky of a {}x{} matrix", n, g.ncols())));
        }
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = g[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite(j));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = g[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// The lower-triangular factor.
    pub fn l(&self) -> &DenseMatrix {
        &self.l
    }

    /// Solves `G x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension(format!("Cholesky solve: {} vs {}", n, b.len())));
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| self.l[(i, k)] * y[k]).sum();
            y[i] = (y[i] - s) / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.l[(k, i)] * y[k]).sum();
            y[i] = (y[i] - s) / self.l[(i, i)];
        }
        Ok(y)
    }
}

/// 1-norm condition number `||G||_1 ||G^{-1}||_1` of a symmetric positive
/// definite matrix, with the inverse formed column by column from Cholesky
/// solves. Returns `f64::INFINITY` when the factorisation breaks down, which
/// is how numerically singular Gram matrices show up.
pub fn cond1_estimate_spd(g: &DenseMatrix) -> f64 {
    let n = g.nrows();
    if n == 0 {
        return 1.0;
    }
    let chol = match Cholesky::factor(g) {
        Ok(c) => c,
        Err(_) => return f64::INFINITY,
    };
    let norm1 = |m: &dyn Fn(usize, usize) -> f64| {
        (0..n).map(|j| (0..n).map(|i| m(i, j).abs()).sum::<f64>()).fold(0.0f64, f64::max)
    };
    let g_norm = norm1(&|i, j| g[(i, j)]);
    let mut inv_norm = 0.0f64;
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = chol.solve(&e).expect("dimension checked");
        e[j] = 0.0;
        if !col.iter().all(|v| v.is_finite()) {
            return f64::INFINITY;
        }
        inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
    }
    g_norm * inv_norm
}
