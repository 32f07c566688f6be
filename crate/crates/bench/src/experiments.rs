//! The comparison experiments: PAP iteration counts per tolerance (table1),
//! APAP outer iterations per tolerance bracket (table2), APAP against block
//! Jacobi (table3), APAP against GMRES(m) on a 2-D Poisson problem (poisson)
//! and on tridiag(-1, 2, -1.05) (asym), and APAP against a dense direct
//! solve on Hilbert matrices (hilbert).

use std::time::Instant;

use approj::baselines::{block_jacobi_solve, gmres_solve, BlockJacobiConfig, GmresConfig};
use approj::linalg::{dense_solve, MatrixLike};
use approj::problems::{Func1D, Problem, ProblemSpec};
use approj::solvers::{apap_solve, pap_solve, rel_error, residual};
use approj::{SolveReport, SolverConfig, Termination};
use rayon::prelude::*;
use serde::Serialize;

use crate::{BenchOptions, Scale};

const TABLE1_TOLS: [f64; 7] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];
/// Tolerance brackets of table2 as (label, strictest tolerance).
const TABLE2_BRACKETS: [(&str, f64); 3] = [("1e-1..1e-7", 1e-7), ("1e-8..1e-13", 1e-13), ("1e-14..1e-19", 1e-19)];
const TABLE3_BLOCKS: [usize; 5] = [30, 35, 40, 45, 50];
const POISSON_RESTARTS: [usize; 8] = [4, 6, 8, 10, 12, 14, 16, 18];
const ASYM_RESTART: usize = 8;

/// Default AP sweeps per projection for table2, table3 and poisson; one
/// sweep needs many more outer iterations at these block counts.
pub const TABLE2_SWEEPS: usize = 3;
pub const TABLE3_SWEEPS: usize = 10;
pub const POISSON_SWEEPS: usize = 10;
pub const HILBERT_BLOCK: usize = 4;

fn map_rows<I, T, F>(items: &[I], parallel: bool, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

fn status(report: &SolveReport) -> String {
    match &report.termination {
        Termination::Converged => "ok".into(),
        Termination::MaxIters => "not converged".into(),
        Termination::Breakdown(r) => format!("FAILED: {r}"),
    }
}

fn failed(what: &str, e: impl std::fmt::Display) -> String {
    format!("FAILED: {what}: {e}")
}

/// Joins per-solver statuses: "ok" when all are ok.
fn join_status(parts: &[(&str, String)]) -> String {
    let bad: Vec<String> = parts.iter().filter(|(_, s)| s != "ok").map(|(name, s)| format!("{name} {s}")).collect();
    if bad.is_empty() {
        "ok".into()
    } else {
        bad.join("; ")
    }
}

fn nonincreasing(h: &[f64]) -> bool {
    h.windows(2).all(|w| w[1] <= w[0])
}

/// Recomputed final relative residual and error of a report.
fn finals(p: &Problem, r: &SolveReport) -> (f64, f64) {
    (residual(&p.a, &r.solution, &p.b), rel_error(&r.solution, &p.x_exact))
}

fn apap_cfg(block_size: usize, tol: f64, sweeps: usize, max_outer: usize) -> SolverConfig {
    SolverConfig { tol, block_size, sweeps_per_projection: sweeps, max_outer, ..SolverConfig::default() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub n: usize,
    pub block_size: usize,
    pub tolerance: f64,
    pub pap_iters: Option<usize>,
    pub rel_residual: Option<f64>,
    pub rel_error: Option<f64>,
    pub wall_time_s: Option<f64>,
    pub status: String,
}

/// PAP on tridiag(-1, 2, -1), u(t) = t(1-t)e^{3+t}, block size 20 with
/// overlap: steps needed for each tolerance 1e-1 ... 1e-7.
pub fn run_table1(opts: &BenchOptions) -> Vec<Table1Row> {
    let n = opts.scale.size(100);
    let bs = 20.min(n);
    let spec = ProblemSpec::tridiag(-1.0, 2.0, -1.0, n, Func1D::Parabolic);
    let problem = spec.build();
    map_rows(&TABLE1_TOLS, opts.parallel, |&tol| {
        let mut row = Table1Row {
            n,
            block_size: bs,
            tolerance: tol,
            pap_iters: None,
            rel_residual: None,
            rel_error: None,
            wall_time_s: None,
            status: String::new(),
        };
        let p = match &problem {
            Ok(p) => p,
            Err(e) => {
                row.status = failed("problem", e);
                return row;
            }
        };
        let cfg = SolverConfig { tol, block_size: bs, max_outer: 200_000, ..SolverConfig::default() };
        match pap_solve(&p.a, &p.b, &cfg, Some(&p.x_exact)) {
            Ok(r) => {
                let (res, err) = finals(p, &r);
                row.pap_iters = Some(r.inner_iters_total);
                row.rel_residual = Some(res);
                row.rel_error = Some(err);
                row.wall_time_s = Some(r.wall_time);
                row.status = status(&r);
            }
            Err(e) => row.status = failed("pap", e),
        }
        row
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub n: usize,
    pub block_size: usize,
    pub sweeps_per_projection: usize,
    pub tolerance_range: String,
    pub target: f64,
    pub outer_iters: Option<usize>,
    pub ap_calls: Option<usize>,
    pub sweeps_total: Option<usize>,
    /// Running residual the solver converged on.
    pub rel_residual: Option<f64>,
    pub true_rel_residual: Option<f64>,
    pub rel_error: Option<f64>,
    pub wall_time_s: Option<f64>,
    pub status: String,
}

/// APAP on the table1 problem with M = 60 and snapshots at 10, 20, ..., 60:
/// outer iterations needed to reach the strictest tolerance of each bracket.
pub fn run_table2(opts: &BenchOptions) -> Vec<Table2Row> {
    let n = opts.scale.size(100);
    let bs = 20.min(n);
    let sweeps = opts.sweeps.unwrap_or(TABLE2_SWEEPS);
    let problem = ProblemSpec::tridiag(-1.0, 2.0, -1.0, n, Func1D::Parabolic).build();
    map_rows(&TABLE2_BRACKETS, opts.parallel, |&(label, tol)| {
        let mut row = Table2Row {
            n,
            block_size: bs,
            sweeps_per_projection: sweeps,
            tolerance_range: label.into(),
            target: tol,
            outer_iters: None,
            ap_calls: None,
            sweeps_total: None,
            rel_residual: None,
            true_rel_residual: None,
            rel_error: None,
            wall_time_s: None,
            status: String::new(),
        };
        let p = match &problem {
            Ok(p) => p,
            Err(e) => {
                row.status = failed("problem", e);
                return row;
            }
        };
        match apap_solve(&p.a, &p.b, &apap_cfg(bs, tol, sweeps, 10), Some(&p.x_exact)) {
            Ok(r) => {
                let (res, err) = finals(p, &r);
                row.outer_iters = Some(r.outer_iters);
                row.ap_calls = Some(r.inner_iters_total);
                row.sweeps_total = Some(r.sweeps_total);
                row.rel_residual = Some(r.final_residual());
                row.true_rel_residual = Some(res);
                row.rel_error = Some(err);
                row.wall_time_s = Some(r.wall_time);
                row.status = status(&r);
            }
            Err(e) => row.status = failed("apap", e),
        }
        row
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table3Row {
    pub n: usize,
    pub block_size: usize,
    pub jacobi_time_s: Option<f64>,
    pub apap_time_s: Option<f64>,
    pub jacobi_iters: Option<usize>,
    /// AP calls over all outer iterations.
    pub apap_iters: Option<usize>,
    pub apap_outer: Option<usize>,
    pub apap_sweeps: Option<usize>,
    pub jacobi_rel_residual: Option<f64>,
    pub apap_rel_residual: Option<f64>,
    pub jacobi_rel_error: Option<f64>,
    pub apap_rel_error: Option<f64>,
    pub status: String,
}

/// APAP (tol 1e-8) against block Jacobi (tol 1e-4) on tridiag(-1, 2, -1),
/// n = 400 at desk scale, u(t) = t(1-t)e^{3+t}.
pub fn run_table3(opts: &BenchOptions) -> Vec<Table3Row> {
    let n = opts.scale.size(400);
    let sweeps = opts.sweeps.unwrap_or(TABLE3_SWEEPS);
    let problem = ProblemSpec::tridiag(-1.0, 2.0, -1.0, n, Func1D::Parabolic).build();
    let blocks: Vec<usize> = TABLE3_BLOCKS.iter().map(|&b| b.min(n)).collect();
    map_rows(&blocks, opts.parallel, |&bs| {
        let mut row = Table3Row {
            n,
            block_size: bs,
            jacobi_time_s: None,
            apap_time_s: None,
            jacobi_iters: None,
            apap_iters: None,
            apap_outer: None,
            apap_sweeps: None,
            jacobi_rel_residual: None,
            apap_rel_residual: None,
            jacobi_rel_error: None,
            apap_rel_error: None,
            status: String::new(),
        };
        let p = match &problem {
            Ok(p) => p,
            Err(e) => {
                row.status = failed("problem", e);
                return row;
            }
        };
        let jcfg = BlockJacobiConfig { block_size: bs, omega: 1.0, max_iters: 50_000, tol: 1e-4 };
        let jac = match block_jacobi_solve(&p.a, &p.b, &jcfg, Some(&p.x_exact)) {
            Ok(r) => {
                let (res, err) = finals(p, &r);
                row.jacobi_time_s = Some(r.wall_time);
                row.jacobi_iters = Some(r.outer_iters);
                row.jacobi_rel_residual = Some(res);
                row.jacobi_rel_error = Some(err);
                status(&r)
            }
            Err(e) => failed("jacobi", e),
        };
        let apap = match apap_solve(&p.a, &p.b, &apap_cfg(bs, 1e-8, sweeps, 100), Some(&p.x_exact)) {
            Ok(r) => {
                let (res, err) = finals(p, &r);
                row.apap_time_s = Some(r.wall_time);
                row.apap_iters = Some(r.inner_iters_total);
                row.apap_outer = Some(r.outer_iters);
                row.apap_sweeps = Some(r.sweeps_total);
                row.apap_rel_residual = Some(res);
                row.apap_rel_error = Some(err);
                status(&r)
            }
            Err(e) => failed("apap", e),
        };
        row.status = join_status(&[("jacobi", jac), ("apap", apap)]);
        row
    })
}

/// Block size giving one AP block about the storage of GMRES(m).
pub fn storage_matched_block(n: usize, restart: usize) -> usize {
    ((restart * n) as f64).sqrt().ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonRow {
    pub nx: usize,
    pub ny: usize,
    pub block_size: usize,
    pub restart: usize,
    pub apap_outer: Option<usize>,
    pub apap_inner: usize,
    pub apap_ap_calls: Option<usize>,
    pub gmres_outer: Option<usize>,
    pub gmres_inner: Option<usize>,
    pub apap_time_s: Option<f64>,
    pub gmres_time_s: Option<f64>,
    pub apap_rel_error: Option<f64>,
    pub gmres_rel_error: Option<f64>,
    pub apap_rel_residual: Option<f64>,
    pub gmres_rel_residual: Option<f64>,
    pub status: String,
}

const POISSON_TOL: f64 = 1e-5;
const POISSON_M: usize = 50;

/// APAP against GMRES(m) on the five-point Poisson matrix of a 50 x 40 grid
/// (desk scale), u = x(1-x)y(1-y)e^{3+x^2+y^2}, tol 1e-5; the APAP block
/// size is ceil(sqrt(m n)).
pub fn run_poisson(opts: &BenchOptions) -> Vec<PoissonRow> {
    let (nx, ny) = (opts.scale.size(50), opts.scale.size(40));
    let n = nx * ny;
    let sweeps = opts.sweeps.unwrap_or(POISSON_SWEEPS);
    let problem = ProblemSpec::poisson(nx, ny).build();
    map_rows(&POISSON_RESTARTS, opts.parallel, |&m| {
        let bs = storage_matched_block(n, m).min(n);
        let mut row = PoissonRow {
            nx,
            ny,
            block_size: bs,
            restart: m,
            apap_outer: None,
            apap_inner: POISSON_M,
            apap_ap_calls: None,
            gmres_outer: None,
            gmres_inner: None,
            apap_time_s: None,
            gmres_time_s: None,
            apap_rel_error: None,
            gmres_rel_error: None,
            apap_rel_residual: None,
            gmres_rel_residual: None,
            status: String::new(),
        };
        let p = match &problem {
            Ok(p) => p,
            Err(e) => {
                row.status = failed("problem", e);
                return row;
            }
        };
        let cfg = SolverConfig {
            inner_m: POISSON_M,
            delta: vec![10, 20, 30, 40, 50],
            ..apap_cfg(bs, POISSON_TOL, sweeps, 200)
        };
        let apap = match apap_solve(&p.a, &p.b, &cfg, Some(&p.x_exact)) {
            Ok(r) => {
                let (res, err) = finals(p, &r);
                row.apap_outer = Some(r.outer_iters);
                row.apap_ap_calls = Some(r.inner_iters_total);
                row.apap_time_s = Some(r.wall_time);
                row.apap_rel_error = Some(err);
                row.apap_rel_residual = Some(res);
                status(&r)
            }
            Err(e) => failed("apap", e),
        };
        let gcfg = GmresConfig { restart_m: m, max_outer: 10_000, tol: POISSON_TOL };
        let gmres = match gmres_solve(&p.a, &p.b, &gcfg, Some(&p.x_exact)) {
            Ok(r) => {
                let (res, err) = finals(p, &r);
                row.gmres_outer = Some(r.outer_iters);
                row.gmres_inner = Some(r.inner_iters_total);
                row.gmres_time_s = Some(r.wall_time);
                row.gmres_rel_error = Some(err);
                row.gmres_rel_residual = Some(res);
                status(&r)
            }
            Err(e) => failed("gmres", e),
        };
        row.status = join_status(&[("apap", apap), ("gmres", gmres)]);
        row
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymRow {
    pub n: usize,
    pub block_size: usize,
    /// Arnoldi steps over all cycles.
    pub gmres_iters: Option<usize>,
    /// AP calls over all outer iterations.
    pub apap_iters: Option<usize>,
    pub gmres_time_s: Option<f64>,
    pub apap_time_s: Option<f64>,
    pub gmres_rel_error: Option<f64>,
    pub apap_rel_error: Option<f64>,
    pub gmres_rel_residual: Option<f64>,
    pub apap_rel_residual: Option<f64>,
    pub status: String,
}

const ASYM_TOL: f64 = 1e-8;

fn asym_sizes(scale: Scale) -> Vec<usize> {
    match scale {
        Scale::Full => (0..10).map(|k| 100 + 500 * k).collect(),
        Scale::Small => vec![100],
        s => [100, 600, 1100].iter().map(|&n| s.size(n)).collect(),
    }
}

/// APAP against GMRES(8) on tridiag(-1, 2, -1.05), u = 2 sin(pi t) e^{3+t},
/// tol 1e-8. GMRES gets 10 n restart cycles; the APAP block size is
/// ceil(sqrt(8 n)).
pub fn run_asym(opts: &BenchOptions) -> Vec<AsymRow> {
    let sweeps = opts.sweeps.unwrap_or(1);
    map_rows(&asym_sizes(opts.scale), opts.parallel, |&n| {
        let bs = storage_matched_block(n, ASYM_RESTART).min(n);
        let mut row = AsymRow {
            n,
            block_size: bs,
            gmres_iters: None,
            apap_iters: None,
            gmres_time_s: None,
            apap_time_s: None,
            gmres_rel_error: None,
            apap_rel_error: None,
            gmres_rel_residual: None,
            apap_rel_residual: None,
            status: String::new(),
        };
        let p = match ProblemSpec::tridiag(-1.0, 2.0, -1.05, n, Func1D::Sine).build() {
            Ok(p) => p,
            Err(e) => {
                row.status = failed("problem", e);
                return row;
            }
        };
        let gcfg = GmresConfig { restart_m: ASYM_RESTART, max_outer: 10 * n, tol: ASYM_TOL };
        let gmres = match gmres_solve(&p.a, &p.b, &gcfg, Some(&p.x_exact)) {
            Ok(r) => {
                let (res, err) = finals(&p, &r);
                row.gmres_iters = Some(r.inner_iters_total);
                row.gmres_time_s = Some(r.wall_time);
                row.gmres_rel_error = Some(err);
                row.gmres_rel_residual = Some(res);
                status(&r)
            }
            Err(e) => failed("gmres", e),
        };
        let apap = match apap_solve(&p.a, &p.b, &apap_cfg(bs, ASYM_TOL, sweeps, 100), Some(&p.x_exact)) {
            Ok(r) => {
                let (res, err) = finals(&p, &r);
                row.apap_iters = Some(r.inner_iters_total);
                row.apap_time_s = Some(r.wall_time);
                row.apap_rel_error = Some(err);
                row.apap_rel_residual = Some(res);
                status(&r)
            }
            Err(e) => failed("apap", e),
        };
        row.status = join_status(&[("gmres", gmres), ("apap", apap)]);
        row
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HilbertRow {
    pub n: usize,
    pub block_size: usize,
    pub apap_outer: Option<usize>,
    pub apap_ap_calls: Option<usize>,
    pub apap_rel_error: Option<f64>,
    pub apap_rel_residual: Option<f64>,
    pub dense_rel_error: Option<f64>,
    pub dense_rel_residual: Option<f64>,
    pub apap_time_s: Option<f64>,
    pub dense_time_s: Option<f64>,
    pub apap_error_monotone: Option<bool>,
    pub apap_residual_monotone: Option<bool>,
    pub status: String,
}

/// Outer iterations APAP gets on the Hilbert systems.
pub const HILBERT_OUTER: usize = 30;

fn hilbert_sizes(scale: Scale) -> Vec<usize> {
    match scale {
        Scale::Small => vec![50, 100],
        Scale::Full => vec![100, 500, 1000, 2000],
        s => [50, 100, 200].iter().map(|&n| s.size(n)).collect(),
    }
}

/// APAP against a dense Householder QR solve on Hilbert matrices with the
/// 2-D manufactured solution sampled on a near-square grid. APAP uses
/// block size 4 with overlap (larger Hilbert row blocks are numerically
/// rank deficient) and runs a fixed number of outer iterations.
pub fn run_hilbert(opts: &BenchOptions) -> Vec<HilbertRow> {
    let sweeps = opts.sweeps.unwrap_or(1);
    map_rows(&hilbert_sizes(opts.scale), opts.parallel, |&n| {
        let bs = HILBERT_BLOCK.min(n);
        let mut row = HilbertRow {
            n,
            block_size: bs,
            apap_outer: None,
            apap_ap_calls: None,
            apap_rel_error: None,
            apap_rel_residual: None,
            dense_rel_error: None,
            dense_rel_residual: None,
            apap_time_s: None,
            dense_time_s: None,
            apap_error_monotone: None,
            apap_residual_monotone: None,
            status: String::new(),
        };
        let p = match ProblemSpec::hilbert(n).build() {
            Ok(p) => p,
            Err(e) => {
                row.status = failed("problem", e);
                return row;
            }
        };
        let start = Instant::now();
        let dense = match dense_solve(&p.a.to_dense(), &p.b) {
            Ok(y) => {
                row.dense_time_s = Some(start.elapsed().as_secs_f64());
                row.dense_rel_error = Some(rel_error(&y, &p.x_exact));
                row.dense_rel_residual = Some(residual(&p.a, &y, &p.b));
                "ok".to_string()
            }
            Err(e) => failed("dense", e),
        };
        let cfg = apap_cfg(bs, 1e-12, sweeps, HILBERT_OUTER);
        let apap = match apap_solve(&p.a, &p.b, &cfg, Some(&p.x_exact)) {
            Ok(r) => {
                let (res, err) = finals(&p, &r);
                row.apap_outer = Some(r.outer_iters);
                row.apap_ap_calls = Some(r.inner_iters_total);
                row.apap_time_s = Some(r.wall_time);
                row.apap_rel_error = Some(err);
                row.apap_rel_residual = Some(res);
                row.apap_error_monotone = r.error_history.as_deref().map(nonincreasing);
                row.apap_residual_monotone = Some(nonincreasing(&r.true_residual_history));
                // Running out of outer iterations is the expected way this
                // experiment ends.
                match r.termination {
                    Termination::Breakdown(_) => status(&r),
                    _ => "ok".into(),
                }
            }
            Err(e) => failed("apap", e),
        };
        row.status = join_status(&[("dense", dense), ("apap", apap)]);
        row
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_matched_blocks_follow_ceil_sqrt() {
        let asym: Vec<usize> = (0..10).map(|k| storage_matched_block(100 + 500 * k, 8)).collect();
        assert_eq!(asym, vec![29, 70, 94, 114, 130, 145, 158, 170, 182, 192]);
        let poisson: Vec<usize> =
            [4, 6, 8, 10, 12, 14, 16, 18].iter().map(|&m| storage_matched_block(2000, m)).collect();
        assert_eq!(poisson, vec![90, 110, 127, 142, 155, 168, 179, 190]);
    }

    #[test]
    fn status_joining() {
        assert_eq!(join_status(&[("a", "ok".into()), ("b", "ok".into())]), "ok");
        assert_eq!(join_status(&[("a", "ok".into()), ("b", "not converged".into())]), "b not converged");
    }

    #[test]
    fn nonincreasing_check() {
        assert!(nonincreasing(&[3.0, 2.0, 2.0, 1.0]));
        assert!(!nonincreasing(&[3.0, 2.0, 2.5]));
        assert!(nonincreasing(&[]));
    }

    #[test]
    fn scaled_sizes() {
        assert_eq!(hilbert_sizes(Scale::Small), vec![50, 100]);
        assert_eq!(asym_sizes(Scale::Full).last(), Some(&4600));
        assert_eq!(asym_sizes(Scale::Factor(0.5)), vec![50, 300, 550]);
    }
}
