//! Reference solvers: block Jacobi and restarted GMRES(m).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::vecops::{axpy, dot, norm2};
use crate::linalg::{householder_qr, tri_upper_solve, MatrixLike, QrFactors};
use crate::partition::make_partition;
use crate::solvers::{rel_error, SolveReport, Termination};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockJacobiConfig {
    pub block_size: usize,
    /// Uniform relaxation weight; 1 is the classical block Jacobi sweep.
    pub omega: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for BlockJacobiConfig {
    fn default() -> Self {
        BlockJacobiConfig { block_size: 20, omega: 1.0, max_iters: 10_000, tol: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmresConfig {
    pub restart_m: usize,
    /// Restart cycles allowed.
    pub max_outer: usize,
    pub tol: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig { restart_m: 8, max_outer: 1000, tol: 1e-7 }
    }
}

fn empty_report(n: usize, exact: Option<&[f64]>) -> SolveReport {
    SolveReport {
        solution: vec![0.0; n],
        outer_iters: 0,
        inner_iters_total: 0,
        sweeps_total: 0,
        residual_history: Vec::new(),
        true_residual_history: Vec::new(),
        error_history: exact.map(|_| Vec::new()),
        wall_time: 0.0,
        termination: Termination::MaxIters,
        dropped_columns: 0,
    }
}

fn check_square<M: MatrixLike + ?Sized>(a: &M, b: &[f64], tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() || b.len() != a.nrows() {
        return Err(Error::Dimension(format!(
            "need a square system, got {}x{} with {} right-hand side entries",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidConfig(format!("tol must be positive, got {tol}")));
    }
    Ok(())
}

/// Block Jacobi over the disjoint division: `x <- x + omega D^{-1} (b - A x)`
/// with `D` the block diagonal of `A`. Each diagonal block is solved through
/// its QR factors. One iteration is one full sweep; the residual is checked
/// after every sweep.
pub fn block_jacobi_solve<M: MatrixLike + ?Sized>(
    a: &M,
    b: &[f64],
    cfg: &BlockJacobiConfig,
    exact_x: Option<&[f64]>,
) -> Result<SolveReport> {
    check_square(a, b, cfg.tol)?;
    if !(cfg.omega > 0.0 && cfg.omega.is_finite()) {
        return Err(Error::InvalidConfig(format!("omega must be positive, got {}", cfg.omega)));
    }
    let start = Instant::now();
    let n = a.nrows();
    let mut report = empty_report(n, exact_x);
    let partition = make_partition(n, cfg.block_size, false)?;
    let mut factors: Vec<QrFactors> = Vec::with_capacity(partition.len());
    for (k, range) in partition.blocks().iter().enumerate() {
        match householder_qr(&a.diagonal_block(range.clone())) {
            Ok(f) => factors.push(f),
            Err(e) => {
                report.termination = Termination::Breakdown(format!("diagonal block {k}: {e}"));
                return Ok(report);
            }
        }
    }
    let nb = norm2(b);
    let scale = if nb == 0.0 { 1.0 } else { nb };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut ax = vec![0.0; n];
    if norm2(&r) / scale <= cfg.tol {
        report.termination = Termination::Converged;
        return Ok(report);
    }
    for _ in 0..cfg.max_iters {
        for (range, f) in partition.blocks().iter().zip(&factors) {
            let qtr = f.qt_mul(&r[range.clone()]);
            match tri_upper_solve(&f.r, &qtr) {
                Ok(d) => axpy(cfg.omega, &d, &mut x[range.clone()]),
                Err(e) => {
                    report.termination = Termination::Breakdown(format!("diagonal block at row {}: {e}", range.start));
                    report.solution = x;
                    report.wall_time = start.elapsed().as_secs_f64();
                    return Ok(report);
                }
            }
        }
        a.apply_into(&x, &mut ax);
        for ((ri, bi), axi) in r.iter_mut().zip(b).zip(&ax) {
            *ri = bi - axi;
        }
        let res = norm2(&r) / scale;
        report.outer_iters += 1;
        report.inner_iters_total += 1;
        report.residual_history.push(res);
        report.true_residual_history.push(res);
        if let (Some(xe), Some(h)) = (exact_x, report.error_history.as_mut()) {
            h.push(rel_error(&x, xe));
        }
        if !res.is_finite() {
            report.termination = Termination::Breakdown("non-finite residual".into());
            break;
        }
        if res <= cfg.tol {
            report.termination = Termination::Converged;
            break;
        }
    }
    report.solution = x;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Arnoldi breakdown threshold relative to the cycle's initial residual.
const HAPPY_BREAKDOWN: f64 = 1e-14;

/// `(c, s, rho)` with `[c s; -s c] [f; g] = [rho; 0]`.
fn givens(f: f64, g: f64) -> (f64, f64, f64) {
    if g == 0.0 {
        (1.0, 0.0, f)
    } else {
        let rho = f.hypot(g);
        (f / rho, g / rho, rho)
    }
}

/// Restarted GMRES(m) with modified Gram-Schmidt Arnoldi and Givens
/// rotations.
///
/// `residual_history` holds the relative residual estimate after every
/// Arnoldi step; `true_residual_history` holds the recomputed residual at
/// the end of every cycle; `outer_iters` counts cycles and
/// `inner_iters_total` Arnoldi steps. A happy breakdown ends the cycle with
/// the exact solution of the projected problem.
pub fn gmres_solve<M: MatrixLike + ?Sized>(
    a: &M,
    b: &[f64],
    cfg: &GmresConfig,
    exact_x: Option<&[f64]>,
) -> Result<SolveReport> {
    check_square(a, b, cfg.tol)?;
    if cfg.restart_m == 0 {
        return Err(Error::InvalidConfig("restart_m must be at least 1".into()));
    }
    let start = Instant::now();
    let n = a.nrows();
    let m = cfg.restart_m.min(n.max(1));
    let mut report = empty_report(n, exact_x);
    let nb = norm2(b);
    let scale = if nb == 0.0 { 1.0 } else { nb };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut beta = norm2(&r);
    if beta / scale <= cfg.tol {
        report.termination = Termination::Converged;
        report.wall_time = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    let mut w = vec![0.0; n];
    'outer: for _ in 0..cfg.max_outer {
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        // Column j of the Hessenberg matrix, rotated as it is built.
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<(f64, f64)> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        let mut happy = false;
        while k < m {
            a.apply_into(&v[k], &mut w);
            let mut col = vec![0.0; k + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                col[i] = hij;
                axpy(-hij, vi, &mut w);
            }
            let hnext = norm2(&w);
            col[k + 1] = hnext;
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a0, a1) = (col[i], col[i + 1]);
                col[i] = c * a0 + s * a1;
                col[i + 1] = -s * a0 + c * a1;
            }
            let (c, s, rho) = givens(col[k], col[k + 1]);
            col[k] = rho;
            col[k + 1] = 0.0;
            cs.push((c, s));
            g[k + 1] = -s * g[k];
            g[k] *= c;
            h.push(col);
            k += 1;
            report.inner_iters_total += 1;
            let est = g[k].abs() / scale;
            report.residual_history.push(est);
            if !est.is_finite() {
                report.termination = Termination::Breakdown("non-finite residual".into());
                break 'outer;
            }
            if est <= cfg.tol {
                break;
            }
            if hnext <= HAPPY_BREAKDOWN * beta {
                happy = true;
                break;
            }
            v.push(w.iter().map(|wi| wi / hnext).collect());
        }
        // Back substitution on the rotated Hessenberg system.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (j, yj) in y.iter().enumerate().skip(i + 1) {
                s -= h[j][i] * yj;
            }
            if h[i][i] == 0.0 {
                report.termination = Termination::Breakdown("singular Hessenberg factor".into());
                break 'outer;
            }
            y[i] = s / h[i][i];
        }
        for (yj, vj) in y.iter().zip(&v) {
            axpy(*yj, vj, &mut x);
        }
        a.apply_into(&x, &mut w);
        for ((ri, bi), wi) in r.iter_mut().zip(b).zip(&w) {
            *ri = bi - wi;
        }
        beta = norm2(&r);
        report.outer_iters += 1;
        report.true_residual_history.push(beta / scale);
        if let (Some(xe), Some(hist)) = (exact_x, report.error_history.as_mut()) {
            hist.push(rel_error(&x, xe));
        }
        if beta / scale <= cfg.tol || happy {
            report.termination = Termination::Converged;
            break;
        }
    }
    report.solution = x;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}
