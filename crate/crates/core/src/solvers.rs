//! Outer iterations: PAP and its accelerated form APAP.
//!
//! Both solvers repeatedly run the AP kernel on the residual system
//! `A e = r` (whose unknown `e` is the current error) and add the resulting
//! projection to the iterate. APAP additionally keeps a few intermediate
//! iterates of an inner loop and, using the scalar ledger to supply their
//! inner products with the unknown error, projects the error onto their span.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ap::{ap_v1, initial_projection, project_onto_span, ApState};
use crate::error::{Error, Result};
use crate::linalg::vecops::{axpy, dot, norm2};
use crate::linalg::{spmv, MatrixLike};
use crate::partition::{factorize_blocks, make_partition, BlockFactorization};

/// Which AP construction the outer iterations call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApVersion {
    /// Paired projections combined through one small least-squares solve.
    V1,
    /// Sequential accumulation over the blocks.
    V2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative residual `||r|| / ||b||` at which the solve stops.
    pub tol: f64,
    /// Outer iterations allowed (PAP steps, or APAP projection cycles).
    pub max_outer: usize,
    pub block_size: usize,
    /// Neighbouring blocks share half their rows.
    pub overlapped: bool,
    pub ap_version: ApVersion,
    /// APAP inner loop length `M`.
    pub inner_m: usize,
    /// APAP snapshot indices, a subset of `1..=inner_m`.
    pub delta: Vec<usize>,
    /// AP sweeps per projection (version 2 only).
    pub sweeps_per_projection: usize,
    /// Relative pivot threshold below which snapshot columns are dropped.
    pub rank_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-7,
            max_outer: 1000,
            block_size: 20,
            overlapped: true,
            ap_version: ApVersion::V2,
            inner_m: 60,
            delta: vec![10, 20, 30, 40, 50, 60],
            sweeps_per_projection: 1,
            rank_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_outer == 0 {
            return bad("max_outer must be at least 1".into());
        }
        if self.block_size == 0 {
            return bad("block_size must be at least 1".into());
        }
        if self.inner_m == 0 {
            return bad("inner_m must be at least 1".into());
        }
        if self.delta.is_empty() {
            return bad("delta must not be empty".into());
        }
        if let Some(d) = self.delta.iter().find(|&&d| d == 0 || d > self.inner_m) {
            return bad(format!("delta entry {d} outside 1..={}", self.inner_m));
        }
        if self.sweeps_per_projection == 0 {
            return bad("sweeps_per_projection must be at least 1".into());
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return bad(format!("rank_tol must lie in (0, 1), got {}", self.rank_tol));
        }
        Ok(())
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "reason")]
pub enum Termination {
    Converged,
    MaxIters,
    Breakdown(String),
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Converged => write!(f, "converged"),
            Termination::MaxIters => write!(f, "max iterations reached"),
            Termination::Breakdown(r) => write!(f, "breakdown: {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub outer_iters: usize,
    /// AP calls for PAP/APAP, Arnoldi steps for GMRES, sweeps for Jacobi.
    pub inner_iters_total: usize,
    /// Block sweeps performed inside AP calls (AP solvers only).
    pub sweeps_total: usize,
    /// Relative residual per outer iteration, as tracked by the solver.
    pub residual_history: Vec<f64>,
    /// `||b - A y|| / ||b||` recomputed from the iterate per outer iteration.
    pub true_residual_history: Vec<f64>,
    /// `||y - x|| / ||x||` per outer iteration, when `x` was supplied.
    pub error_history: Option<Vec<f64>>,
    /// Seconds.
    pub wall_time: f64,
    pub termination: Termination,
    /// Snapshot or pair columns dropped as numerically dependent.
    pub dropped_columns: usize,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// The last tracked relative residual (1 before any iteration).
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(1.0)
    }
}

/// `||b - A x|| / ||b||`, or the absolute norm when `b = 0`.
///
/// # Panics
/// When the dimensions disagree.
pub fn residual<M: MatrixLike + ?Sized>(a: &M, x: &[f64], b: &[f64]) -> f64 {
    assert!(a.ncols() == x.len() && a.nrows() == b.len(), "residual: dimension mismatch");
    let mut r = vec![0.0; b.len()];
    a.apply_into(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let nb = norm2(b);
    let nr = norm2(&r);
    if nb == 0.0 {
        nr
    } else {
        nr / nb
    }
}

/// `||x - exact|| / ||exact||`, or the absolute norm when `exact = 0`.
///
/// # Panics
/// When the lengths disagree.
pub fn rel_error(x: &[f64], exact: &[f64]) -> f64 {
    assert_eq!(x.len(), exact.len(), "rel_error: length mismatch");
    let d: f64 = x.iter().zip(exact).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let ne = norm2(exact);
    if ne == 0.0 {
        d
    } else {
        d / ne
    }
}

/// The AP construction chosen by a [`SolverConfig`], with its block factors.
#[derive(Debug, Clone)]
pub struct ApProjector {
    bf: BlockFactorization,
    version: ApVersion,
    sweeps: usize,
    rank_tol: f64,
}

/// One AP call: the projection of the unknown `e` (with `A e = r`).
#[derive(Debug, Clone)]
pub struct Projection {
    pub p: Vec<f64>,
    /// `e^T p`
    pub c: f64,
    pub sweeps: usize,
    pub dropped_columns: usize,
}

impl ApProjector {
    /// Partitions and factors `a`. Version 2 uses the configured division;
    /// version 1 pairs neighbouring blocks of the disjoint division.
    pub fn new<M: MatrixLike + ?Sized>(a: &M, cfg: &SolverConfig) -> Result<Self> {
        let n = a.nrows();
        let partition = match cfg.ap_version {
            ApVersion::V2 => make_partition(n, cfg.block_size, cfg.overlapped)?,
            ApVersion::V1 => make_partition(n, cfg.block_size, false)?.paired()?,
        };
        Ok(ApProjector {
            bf: factorize_blocks(a, &partition)?,
            version: cfg.ap_version,
            sweeps: cfg.sweeps_per_projection,
            rank_tol: cfg.rank_tol,
        })
    }

    pub fn factorization(&self) -> &BlockFactorization {
        &self.bf
    }

    /// Projects the solution of `A e = r`. Propagates
    /// [`Error::TrivialSolution`] for `r = 0`.
    pub fn project<M: MatrixLike + ?Sized>(&self, a: &M, r: &[f64]) -> Result<Projection> {
        match self.version {
            ApVersion::V2 => {
                let mut state: ApState = initial_projection(a, r)?;
                let reduced = self.bf.reduce_rhs(r)?;
                for _ in 0..self.sweeps {
                    crate::ap::ap_v2_sweep_reduced(&self.bf, &reduced, &mut state);
                }
                Ok(Projection { p: state.p, c: state.c, sweeps: self.sweeps, dropped_columns: 0 })
            }
            ApVersion::V1 => {
                if dot(r, r) == 0.0 {
                    return Err(Error::TrivialSolution);
                }
                let s = ap_v1(&self.bf, r, self.rank_tol)?;
                let dropped = self.bf.len() - s.rank.min(self.bf.len());
                Ok(Projection { p: s.v, c: s.c, sweeps: 1, dropped_columns: dropped })
            }
        }
    }
}

/// Running sums reconstructing `x^T x_k` for the APAP inner loop, where
/// `x_k = p_1 + ... + p_k` and `x` is the unknown error.
///
/// Step `i` runs AP on the residual system, whose solution is `x - x_{i-1}`,
/// so AP supplies `c_i = (x - x_{i-1})^T p_i`; `tau_i = x_{i-1}^T p_i` is
/// computable. Hence `x^T p_i = c_i + tau_i` and
/// `l_k = sum_i (c_i + tau_i) = x^T x_k`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalarLedger {
    pub c_seq: Vec<f64>,
    pub tau_seq: Vec<f64>,
    pub l_running: f64,
}

impl ScalarLedger {
    pub fn push(&mut self, c: f64, tau: f64) {
        self.c_seq.push(c);
        self.tau_seq.push(tau);
        self.l_running += c + tau;
    }

    /// `sum c + sum tau`, recomputed from the sequences.
    pub fn total(&self) -> f64 {
        self.c_seq.iter().sum::<f64>() + self.tau_seq.iter().sum::<f64>()
    }
}

/// The snapshots and ledger values from one APAP inner loop.
#[derive(Debug, Clone)]
pub struct InnerCycle {
    /// Accumulated iterates `x_i` at the snapshot indices.
    pub snapshots: Vec<Vec<f64>>,
    /// The inner step (1-based) each snapshot was taken after.
    pub snapshot_steps: Vec<usize>,
    /// Ledger value `l_i` at each snapshot.
    pub ledger_values: Vec<f64>,
    pub ledger: ScalarLedger,
    /// Residual `b - A x_i` after the last step.
    pub residual: Vec<f64>,
    pub steps: usize,
    pub sweeps: usize,
}

/// Runs one APAP inner loop on `A e = b` for up to `cfg.inner_m` AP calls.
///
/// The loop ends early once `||r|| <= stop_norm` or when AP yields nothing
/// more; the final iterate is then snapshotted as well.
pub fn apap_inner_cycle<M: MatrixLike + ?Sized>(
    a: &M,
    projector: &ApProjector,
    b: &[f64],
    cfg: &SolverConfig,
    stop_norm: f64,
) -> Result<InnerCycle> {
    let n = a.ncols();
    let mut r = b.to_vec();
    let mut x = vec![0.0; n];
    let mut ledger = ScalarLedger::default();
    let mut out = InnerCycle {
        snapshots: Vec::new(),
        snapshot_steps: Vec::new(),
        ledger_values: Vec::new(),
        ledger: ScalarLedger::default(),
        residual: Vec::new(),
        steps: 0,
        sweeps: 0,
    };
    let mut ap_buf = vec![0.0; a.nrows()];
    for i in 1..=cfg.inner_m {
        let proj = match projector.project(a, &r) {
            Ok(p) => p,
            Err(Error::TrivialSolution) => break,
            Err(e) => return Err(e),
        };
        if proj.p.iter().all(|v| *v == 0.0) {
            break;
        }
        let tau = dot(&x, &proj.p);
        ledger.push(proj.c, tau);
        axpy(1.0, &proj.p, &mut x);
        a.apply_into(&proj.p, &mut ap_buf);
        axpy(-1.0, &ap_buf, &mut r);
        out.steps = i;
        out.sweeps += proj.sweeps;
        let snap = cfg.delta.contains(&i);
        if snap {
            out.snapshots.push(x.clone());
            out.snapshot_steps.push(i);
            out.ledger_values.push(ledger.l_running);
        }
        if norm2(&r) <= stop_norm {
            break;
        }
    }
    if out.steps > 0 && out.snapshot_steps.last() != Some(&out.steps) {
        out.snapshots.push(x);
        out.snapshot_steps.push(out.steps);
        out.ledger_values.push(ledger.l_running);
    }
    out.ledger = ledger;
    out.residual = r;
    Ok(out)
}

struct Tracker<'a, M: MatrixLike + ?Sized> {
    a: &'a M,
    b0: &'a [f64],
    nb: f64,
    exact: Option<&'a [f64]>,
    report: SolveReport,
    start: Instant,
}

impl<'a, M: MatrixLike + ?Sized> Tracker<'a, M> {
    fn new(a: &'a M, b0: &'a [f64], exact: Option<&'a [f64]>) -> Self {
        Tracker {
            a,
            b0,
            nb: norm2(b0),
            exact,
            report: SolveReport {
                solution: vec![0.0; a.ncols()],
                outer_iters: 0,
                inner_iters_total: 0,
                sweeps_total: 0,
                residual_history: Vec::new(),
                true_residual_history: Vec::new(),
                error_history: exact.map(|_| Vec::new()),
                wall_time: 0.0,
                termination: Termination::MaxIters,
                dropped_columns: 0,
            },
            start: Instant::now(),
        }
    }

    /// Records one outer iteration; returns the tracked relative residual.
    fn record(&mut self, y: &[f64], r: &[f64]) -> f64 {
        let scale = if self.nb == 0.0 { 1.0 } else { self.nb };
        let res = norm2(r) / scale;
        self.report.outer_iters += 1;
        self.report.residual_history.push(res);
        self.report.true_residual_history.push(residual(self.a, y, self.b0));
        if let (Some(x), Some(h)) = (self.exact, self.report.error_history.as_mut()) {
            h.push(rel_error(y, x));
        }
        res
    }

    fn finish(mut self, y: Vec<f64>, termination: Termination) -> SolveReport {
        self.report.solution = y;
        self.report.termination = termination;
        self.report.wall_time = self.start.elapsed().as_secs_f64();
        self.report
    }
}

fn check_inputs<M: MatrixLike + ?Sized>(a: &M, b: &[f64], exact: Option<&[f64]>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("matrix is {}x{}, need square", a.nrows(), a.ncols())));
    }
    if b.len() != a.nrows() {
        return Err(Error::Dimension(format!("b has {} entries, matrix has {} rows", b.len(), a.nrows())));
    }
    if let Some(x) = exact {
        if x.len() != a.ncols() {
            return Err(Error::Dimension(format!("exact solution has {} entries", x.len())));
        }
    }
    if !crate::linalg::vecops::all_finite(b) {
        return Err(Error::InvalidArgument("b has non-finite entries".into()));
    }
    Ok(())
}

/// Consecutive zero projections on a nonzero residual before giving up.
const MAX_ZERO_PROJECTIONS: usize = 3;

/// Progressively accumulated projection: `p = AP(A, r)`, `y += p`,
/// `r -= A p`, until `||r|| / ||b|| <= tol`.
///
/// Configuration, dimension and factorisation errors are returned as `Err`;
/// failures during the iteration end the solve with
/// [`Termination::Breakdown`].
pub fn pap_solve<M: MatrixLike + ?Sized>(
    a: &M,
    b: &[f64],
    cfg: &SolverConfig,
    exact_x: Option<&[f64]>,
) -> Result<SolveReport> {
    cfg.validate()?;
    check_inputs(a, b, exact_x)?;
    let mut t = Tracker::new(a, b, exact_x);
    let n = a.ncols();
    let mut y = vec![0.0; n];
    if t.nb == 0.0 {
        return Ok(t.finish(y, Termination::Converged));
    }
    let projector = ApProjector::new(a, cfg)?;
    let mut r = b.to_vec();
    let mut ap = vec![0.0; n];
    let mut zero_run = 0;
    for _ in 0..cfg.max_outer {
        let proj = match projector.project(a, &r) {
            Ok(p) => p,
            Err(Error::TrivialSolution) => return Ok(t.finish(y, Termination::Converged)),
            Err(e) => return Ok(t.finish(y, Termination::Breakdown(e.to_string()))),
        };
        t.report.inner_iters_total += 1;
        t.report.sweeps_total += proj.sweeps;
        t.report.dropped_columns += proj.dropped_columns;
        if proj.p.iter().all(|v| *v == 0.0) {
            zero_run += 1;
            if zero_run >= MAX_ZERO_PROJECTIONS {
                let reason = Error::SingularSystem.to_string();
                return Ok(t.finish(y, Termination::Breakdown(reason)));
            }
            continue;
        }
        zero_run = 0;
        axpy(1.0, &proj.p, &mut y);
        a.apply_into(&proj.p, &mut ap);
        axpy(-1.0, &ap, &mut r);
        let res = t.record(&y, &r);
        if !res.is_finite() {
            return Ok(t.finish(y, Termination::Breakdown("non-finite residual".into())));
        }
        if res <= cfg.tol {
            return Ok(t.finish(y, Termination::Converged));
        }
    }
    Ok(t.finish(y, Termination::MaxIters))
}

/// Accelerated PAP. Each outer iteration runs an inner PAP loop of up to
/// `inner_m` AP calls on the current residual system, keeps the iterates at
/// the `delta` steps together with their ledger values, and corrects `y` by
/// the projection of the error onto the span of those snapshots.
///
/// Convergence is judged on the running residual `b <- b - A v`; the
/// recomputed residual is reported alongside.
pub fn apap_solve<M: MatrixLike + ?Sized>(
    a: &M,
    b: &[f64],
    cfg: &SolverConfig,
    exact_x: Option<&[f64]>,
) -> Result<SolveReport> {
    cfg.validate()?;
    check_inputs(a, b, exact_x)?;
    let mut t = Tracker::new(a, b, exact_x);
    let n = a.ncols();
    let mut y = vec![0.0; n];
    if t.nb == 0.0 {
        return Ok(t.finish(y, Termination::Converged));
    }
    let projector = ApProjector::new(a, cfg)?;
    let mut b_cur = b.to_vec();
    let stop_norm = cfg.tol * t.nb;
    for _ in 0..cfg.max_outer {
        let cycle = match apap_inner_cycle(a, &projector, &b_cur, cfg, stop_norm) {
            Ok(c) => c,
            Err(e) => return Ok(t.finish(y, Termination::Breakdown(e.to_string()))),
        };
        t.report.inner_iters_total += cycle.steps;
        t.report.sweeps_total += cycle.sweeps;
        if cycle.snapshots.is_empty() {
            let reason = Error::DegenerateSnapshots.to_string();
            return Ok(t.finish(y, Termination::Breakdown(reason)));
        }
        let proj = match project_onto_span(&cycle.snapshots, &cycle.ledger_values, cfg.rank_tol) {
            Ok(p) => p,
            Err(e) => return Ok(t.finish(y, Termination::Breakdown(e.to_string()))),
        };
        t.report.dropped_columns += cycle.snapshots.len() - proj.rank;
        axpy(1.0, &proj.v, &mut y);
        let av = spmv(a, &proj.v)?;
        axpy(-1.0, &av, &mut b_cur);
        let res = t.record(&y, &b_cur);
        if !res.is_finite() {
            return Ok(t.finish(y, Termination::Breakdown("non-finite residual".into())));
        }
        if res <= cfg.tol {
            return Ok(t.finish(y, Termination::Converged));
        }
    }
    Ok(t.finish(y, Termination::MaxIters))
}
