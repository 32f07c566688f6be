//! Householder QR, with and without column pivoting.

use super::{tri_upper_solve, DenseMatrix};
use crate::error::{Error, Result};

/// Thin QR factors `M = Q R` of a tall matrix: `Q` is `n x m` with orthonormal
/// columns, `R` is `m x m` upper triangular with a nonnegative diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct QrFactors {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

impl QrFactors {
    /// `Q^T v`
    pub fn qt_mul(&self, v: &[f64]) -> Vec<f64> {
        let (n, m) = (self.q.nrows(), self.q.ncols());
        let mut out = vec![0.0; m];
        for i in 0..n {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for (o, q) in out.iter_mut().zip(self.q.row(i)) {
                *o += q * vi;
            }
        }
        out
    }

    /// `out += Q z`
    pub fn q_mul_add(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o += self.q.row(i).iter().zip(z).map(|(q, zk)| q * zk).sum::<f64>();
        }
    }
}

/// Column-pivoted, rank-revealing QR: `M P = Q R` truncated to the numerical
/// rank. `perm[k]` is the original index of the `k`-th pivoted column.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotedQr {
    /// `n x rank`, orthonormal columns.
    pub q: DenseMatrix,
    /// `rank x m`, upper trapezoidal, columns in pivoted order.
    pub r: DenseMatrix,
    pub perm: Vec<usize>,
    pub rank: usize,
}

struct Reflector {
    v: Vec<f64>,
    beta: f64,
}

/// Applies `I - beta v v^T` to rows `j..` of columns `cols` of `a`.
fn reflect_columns(a: &mut DenseMatrix, j: usize, h: &Reflector, cols: std::ops::Range<usize>) {
    if h.beta == 0.0 {
        return;
    }
    for c in cols {
        let s: f64 = h.v.iter().enumerate().map(|(k, vk)| vk * a[(j + k, c)]).sum();
        if s == 0.0 {
            continue;
        }
        let f = h.beta * s;
        for (k, vk) in h.v.iter().enumerate() {
            a[(j + k, c)] -= f * vk;
        }
    }
}

fn make_reflector(a: &DenseMatrix, j: usize, col: usize) -> (Reflector, f64) {
    let n = a.nrows();
    let x: Vec<f64> = (j..n).map(|i| a[(i, col)]).collect();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (Reflector { v: x, beta: 0.0 }, 0.0);
    }
    let alpha = if x[0] >= 0.0 { -norm } else { norm };
    let mut v = x;
    v[0] -= alpha;
    let vv: f64 = v.iter().map(|t| t * t).sum();
    let beta = if vv == 0.0 { 0.0 } else { 2.0 / vv };
    (Reflector { v, beta }, alpha)
}

/// Accumulates `Q = H_0 H_1 ... H_{k-1} [I_k; 0]`.
fn form_q(n: usize, k: usize, reflectors: &[Reflector]) -> DenseMatrix {
    let mut q = DenseMatrix::zeros(n, k);
    for i in 0..k {
        q[(i, i)] = 1.0;
    }
    for (j, h) in reflectors.iter().enumerate().rev() {
        reflect_columns(&mut q, j, h, 0..k);
    }
    q
}

fn qr_impl(m: &DenseMatrix, rank_tol: Option<f64>) -> Result<QrFactors> {
    let (n, k) = (m.nrows(), m.ncols());
    if n < k {
        return Err(Error::Dimension(format!("QR needs rows >= cols, got {n}x{k}")));
    }
    let mut a = m.clone();
    let mut reflectors = Vec::with_capacity(k);
    let mut diag = vec![0.0; k];
    for j in 0..k {
        let (h, alpha) = make_reflector(&a, j, j);
        if let Some(tol) = rank_tol {
            if !(alpha.abs() >= tol) {
                return Err(Error::RankDeficient { column: j, block: None });
            }
        }
        reflect_columns(&mut a, j, &h, j + 1..k);
        diag[j] = alpha;
        reflectors.push(h);
    }
    let mut q = form_q(n, k, &reflectors);
    let mut r = DenseMatrix::zeros(k, k);
    for i in 0..k {
        r[(i, i)] = diag[i];
        for c in i + 1..k {
            r[(i, c)] = a[(i, c)];
        }
    }
    // Normalise to a nonnegative diagonal so the factorisation is unique.
    for i in 0..k {
        if r[(i, i)] < 0.0 {
            for c in i..k {
                r[(i, c)] = -r[(i, c)];
            }
            for row in 0..n {
                q[(row, i)] = -q[(row, i)];
            }
        }
    }
    Ok(QrFactors { q, r })
}

/// Householder QR of a tall full-column-rank matrix.
///
/// Fails with [`Error::RankDeficient`] when a diagonal entry of `R` falls
/// below `1e-12 * ||M||_F`.
pub fn householder_qr(m: &DenseMatrix) -> Result<QrFactors> {
    let tol = 1e-12 * m.frobenius_norm();
    qr_impl(m, Some(tol))
}

/// Column-pivoted Householder QR, truncated once the largest remaining
/// column norm drops to `rel_tol * |R[0,0]|` or below.
pub fn householder_qr_pivoted(m: &DenseMatrix, rel_tol: f64) -> PivotedQr {
    let (n, k) = (m.nrows(), m.ncols());
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut reflectors = Vec::new();
    let mut diag = Vec::new();
    let mut r00 = 0.0;
    for j in 0..k.min(n) {
        // Pick the remaining column with the largest trailing norm.
        let (best, best_norm) = (j..k)
            .map(|c| (c, (j..n).map(|i| a[(i, c)] * a[(i, c)]).sum::<f64>().sqrt()))
            .fold((j, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if j == 0 {
            r00 = best_norm;
        }
        if best_norm == 0.0 || best_norm <= rel_tol * r00 {
            break;
        }
        if best != j {
            for i in 0..n {
                let t = a[(i, j)];
                a[(i, j)] = a[(i, best)];
                a[(i, best)] = t;
            }
            perm.swap(j, best);
        }
        let (h, alpha) = make_reflector(&a, j, j);
        reflect_columns(&mut a, j, &h, j + 1..k);
        diag.push(alpha);
        reflectors.push(h);
    }
    let rank = reflectors.len();
    let q = form_q(n, rank, &reflectors);
    let mut r = DenseMatrix::zeros(rank, k);
    for i in 0..rank {
        r[(i, i)] = diag[i];
        for c in i + 1..k {
            r[(i, c)] = a[(i, c)];
        }
    }
    PivotedQr { q, r, perm, rank }
}

/// Solves a square system through Householder QR without any rank test.
///
/// This is the "direct solver" reference: it returns whatever backward-stable
/// QR produces, however ill-conditioned `a` is. Only an exactly zero pivot is
/// reported.
pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::Dimension("dense_solve needs a square system".into()));
    }
    let f = qr_impl(a, None)?;
    let qtb = f.qt_mul(b);
    tri_upper_solve(&f.r, &qtb)
}
