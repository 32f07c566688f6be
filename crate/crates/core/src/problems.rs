//! Test matrices and manufactured solutions.
//!
//! Every right-hand side is manufactured as `b = A x_exact`, so errors are
//! measurable exactly. Grid functions are sampled at the interior nodes
//! `t_i = i h`, `h = 1/(n+1)`.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mm, spmv, AnyMatrix, CsrMatrix, DenseMatrix, MatrixLike};

/// `tridiag(lo, di, up)` of order `n`: `lo` below the diagonal, `up` above.
pub fn gen_tridiag(lo: f64, di: f64, up: f64, n: usize) -> Result<CsrMatrix> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("tridiagonal order must be >= 2, got {n}")));
    }
    let mut t = Vec::with_capacity(3 * n - 2);
    for i in 0..n {
        if i > 0 {
            t.push((i, i - 1, lo));
        }
        t.push((i, i, di));
        if i + 1 < n {
            t.push((i, i + 1, up));
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

/// Five-point Laplacian on an `nx x ny` interior grid (4 on the diagonal,
/// -1 for each neighbour), unknowns ordered with `x` varying fastest.
pub fn gen_poisson5(nx: usize, ny: usize) -> Result<CsrMatrix> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!("grid must be at least 2x2, got {nx}x{ny}")));
    }
    let n = nx * ny;
    let idx = |i: usize, j: usize| j * nx + i;
    let mut t = Vec::with_capacity(5 * n);
    for j in 0..ny {
        for i in 0..nx {
            let k = idx(i, j);
            if j > 0 {
                t.push((k, idx(i, j - 1), -1.0));
            }
            if i > 0 {
                t.push((k, idx(i - 1, j), -1.0));
            }
            t.push((k, k, 4.0));
            if i + 1 < nx {
                t.push((k, idx(i + 1, j), -1.0));
            }
            if j + 1 < ny {
                t.push((k, idx(i, j + 1), -1.0));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

/// The Hilbert matrix `H[i][j] = 1 / (i + j + 1)` (0-based).
pub fn gen_hilbert(n: usize) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("Hilbert order must be >= 1".into()));
    }
    let data = (0..n * n).map(|k| 1.0 / ((k / n + k % n + 1) as f64)).collect();
    DenseMatrix::new(n, n, data)
}

/// One-dimensional manufactured solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Func1D {
    /// `t (1 - t) e^{3 + t}`
    Parabolic,
    /// `2 sin(pi t) e^{3 + t}`
    Sine,
}

impl Func1D {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Func1D::Parabolic => t * (1.0 - t) * (3.0 + t).exp(),
            Func1D::Sine => 2.0 * (PI * t).sin() * (3.0 + t).exp(),
        }
    }
}

/// `f(i h)` for `i = 1..=n`, `h = 1/(n+1)`.
pub fn exact_solution_1d(n: usize, f: Func1D) -> Vec<f64> {
    let h = 1.0 / (n as f64 + 1.0);
    (1..=n).map(|i| f.eval(i as f64 * h)).collect()
}

/// `x (1-x) y (1-y) e^{3 + x^2 + y^2}` at the interior nodes of an
/// `nx x ny` grid with `hx = 1/(nx+1)`, `hy = 1/(ny+1)`, `x` varying fastest.
pub fn exact_solution_2d(nx: usize, ny: usize) -> Vec<f64> {
    let (hx, hy) = (1.0 / (nx as f64 + 1.0), 1.0 / (ny as f64 + 1.0));
    let mut out = Vec::with_capacity(nx * ny);
    for j in 1..=ny {
        let y = j as f64 * hy;
        for i in 1..=nx {
            let x = i as f64 * hx;
            out.push(x * (1.0 - x) * y * (1.0 - y) * (3.0 + x * x + y * y).exp());
        }
    }
    out
}

/// The most nearly square grid `nx x ny = n` with `nx <= ny`.
pub fn grid_shape(n: usize) -> (usize, usize) {
    let mut nx = (n as f64).sqrt().floor() as usize;
    while nx > 1 && !n.is_multiple_of(nx) {
        nx -= 1;
    }
    let nx = nx.max(1);
    (nx, n / nx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ProblemKind {
    Tridiag { lo: f64, di: f64, up: f64, n: usize },
    Poisson5 { nx: usize, ny: usize },
    Hilbert { n: usize },
    MatrixMarket { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum SolutionKind {
    Func1D(Func1D),
    /// The 2-D function on the problem's own grid (Poisson) or on
    /// [`grid_shape`]`(n)` otherwise.
    Func2D,
    Ones,
    Custom(Vec<f64>),
    /// No known solution: the right-hand side was supplied directly.
    /// Such a spec only describes a run and cannot be built.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub solution: SolutionKind,
}

/// A generated system with its manufactured solution.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: AnyMatrix,
    pub b: Vec<f64>,
    pub x_exact: Vec<f64>,
}

impl ProblemSpec {
    pub fn tridiag(lo: f64, di: f64, up: f64, n: usize, f: Func1D) -> Self {
        ProblemSpec { kind: ProblemKind::Tridiag { lo, di, up, n }, solution: SolutionKind::Func1D(f) }
    }

    pub fn poisson(nx: usize, ny: usize) -> Self {
        ProblemSpec { kind: ProblemKind::Poisson5 { nx, ny }, solution: SolutionKind::Func2D }
    }

    pub fn hilbert(n: usize) -> Self {
        ProblemSpec { kind: ProblemKind::Hilbert { n }, solution: SolutionKind::Func2D }
    }

    pub fn build(&self) -> Result<Problem> {
        let a: AnyMatrix = match &self.kind {
            ProblemKind::Tridiag { lo, di, up, n } => gen_tridiag(*lo, *di, *up, *n)?.into(),
            ProblemKind::Poisson5 { nx, ny } => gen_poisson5(*nx, *ny)?.into(),
            ProblemKind::Hilbert { n } => gen_hilbert(*n)?.into(),
            ProblemKind::MatrixMarket { path } => mm::read_matrix(path)?,
        };
        let n = a.ncols();
        let x_exact = match &self.solution {
            SolutionKind::Func1D(f) => exact_solution_1d(n, *f),
            SolutionKind::Func2D => {
                let (nx, ny) = match self.kind {
                    ProblemKind::Poisson5 { nx, ny } => (nx, ny),
                    _ => grid_shape(n),
                };
                exact_solution_2d(nx, ny)
            }
            SolutionKind::Ones => vec![1.0; n],
            SolutionKind::Custom(v) => {
                if v.len() != n {
                    return Err(Error::Dimension(format!("custom solution has {} entries, need {n}", v.len())));
                }
                v.clone()
            }
            SolutionKind::Unknown => {
                return Err(Error::InvalidConfig("a problem without a known solution cannot be generated".into()))
            }
        };
        if a.nrows() != n {
            return Err(Error::Dimension(format!("matrix is {}x{n}, need square", a.nrows())));
        }
        let b = spmv(&a, &x_exact)?;
        Ok(Problem { a, b, x_exact })
    }
}
