//! The accumulated projection kernel.
//!
//! Given `b = A x` with `x` unknown, AP builds a sequence of vectors `p_i`,
//! each the orthogonal projection of `x` onto `ran([p_{i-1}, A_i^T])`. The
//! projections only ever get longer, and `x - p_i` is orthogonal to `p_i`,
//! so `c_i = x^T p_i = ||p_i||^2` is known without knowing `x`.
//!
//! The hot path ([`advance_block`]) works through the cached block factors:
//! with `z = Q_i^T p` and `p_perp = p - Q_i z`, the new projection is
//! `Q_i b̃_i + gamma * p_perp` where `gamma = (c - z^T b̃_i) / ||p_perp||^2`.
//! [`ap_step_direct`] and [`ap_step_rank1`] build the same step from the
//! normal equations and serve as independent oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::vecops::{axpy, dot, norm2};
use crate::linalg::{cond1_estimate_spd, householder_qr_pivoted, tri_upper_transpose_solve, Cholesky};
use crate::linalg::{spmv, transpose_spmv, DenseMatrix, MatrixLike};
use crate::partition::{BlockFactor, BlockFactorization};

/// Below this ratio `||p_perp||^2 / ||p||^2` the vector `p` is treated as
/// lying in the block's row space.
const DEGENERATE_RATIO: f64 = 1e-16;

/// A step that moves `p` by no more than this fraction of `||p||` is stagnant.
const STAGNATION_RATIO: f64 = 1e-14;

/// Condition estimate above which the modified Gram matrix is singular.
pub const MODIFIED_GRAM_COND_LIMIT: f64 = 1e14;

/// The best combination `v_1 + s v_2` of two unit directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinationResult {
    pub s: f64,
    /// `|x^T v| / ||v||` at the optimum.
    pub f_s: f64,
}

/// Maximises `f(t) = |b1 + t b2| / sqrt(1 + 2 alpha t + t^2)`, the length of the
/// projection of `x` onto `v_1 + t v_2` when `x^T v_k = b_k`, `||v_k|| = 1` and
/// `v_1^T v_2 = alpha`.
pub fn optimal_combination(b1: f64, b2: f64, alpha: f64) -> Result<CombinationResult> {
    if !(b1.is_finite() && b2.is_finite() && alpha.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input".into()));
    }
    if alpha.abs() >= 1.0 {
        return Err(Error::DegenerateDirections);
    }
    if b1.abs() < b2.abs() {
        return Err(Error::InvalidArgument(format!("need |b1| >= |b2|, got b1={b1}, b2={b2}")));
    }
    let den = b1 - alpha * b2;
    if den == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let s = (b2 - alpha * b1) / den;
    let r = b2 / b1;
    let f_s = b1.abs() * (1.0 + (r - alpha).powi(2) / (1.0 - alpha * alpha)).sqrt();
    Ok(CombinationResult { s, f_s })
}

/// The running projection `p` of the solution, with `c = x^T p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApState {
    pub p: Vec<f64>,
    pub c: f64,
    /// `||p||` after construction and after every block step.
    pub norm_history: Vec<f64>,
    /// Block steps that left `p` unchanged.
    pub stagnant_steps: usize,
    /// Block steps where `p` lay in the block's row space.
    pub degenerate_steps: usize,
}

impl ApState {
    pub fn new(p: Vec<f64>, c: f64) -> Self {
        let norm = norm2(&p);
        ApState { p, c, norm_history: vec![norm], stagnant_steps: 0, degenerate_steps: 0 }
    }

    pub fn zero(n: usize) -> Self {
        ApState::new(vec![0.0; n], 0.0)
    }
}

/// `p_0 = alpha A^T b` with `alpha = b^T b / ||A^T b||^2`, and `c_0 = alpha b^T b`.
///
/// Fails with [`Error::TrivialSolution`] for `b = 0` (the caller's answer is
/// `x = 0`) and [`Error::SingularSystem`] when `A^T b = 0`.
pub fn initial_projection<M: MatrixLike + ?Sized>(a: &M, b: &[f64]) -> Result<ApState> {
    let bb = dot(b, b);
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!("{} rows vs {} entries", a.nrows(), b.len())));
    }
    if bb == 0.0 {
        return Err(Error::TrivialSolution);
    }
    let mut p = transpose_spmv(a, b)?;
    let atb = dot(&p, &p);
    if atb == 0.0 {
        return Err(Error::SingularSystem);
    }
    let alpha = bb / atb;
    p.iter_mut().for_each(|v| *v *= alpha);
    Ok(ApState::new(p, alpha * bb))
}

/// What a single block step did to the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Advanced,
    /// `A_i p = b_i` held (to rounding); `p` was kept.
    Stagnant,
    /// `p` was (numerically) in `ran(A_i^T)`; the plain block projection
    /// replaced it if that was longer.
    Degenerate,
}

/// Replaces `state.p` by the projection of `x` onto `ran([p, A_i^T])`.
/// `bt` is the block's reduced right-hand side `R_i^{-T} b_i`.
pub fn advance_block(f: &BlockFactor, bt: &[f64], state: &mut ApState) -> StepKind {
    let p = &state.p;
    let pp = dot(p, p);
    let z = f.qt_mul(p);
    let mut perp = p.clone();
    f.q_mul_add(-1.0, &z, &mut perp);
    let nn = dot(&perp, &perp);

    let mut next = vec![0.0; p.len()];
    f.q_mul_add(1.0, bt, &mut next);
    let kind = if nn > DEGENERATE_RATIO * pp {
        let gamma = (state.c - dot(&z, bt)) / nn;
        axpy(gamma, &perp, &mut next);
        StepKind::Advanced
    } else {
        state.degenerate_steps += 1;
        StepKind::Degenerate
    };

    let next_sq = dot(&next, &next);
    let moved = {
        let mut d = 0.0;
        for (a, b) in next.iter().zip(p) {
            d += (a - b) * (a - b);
        }
        d.sqrt()
    };
    // The exact projection can never be shorter than p; a shorter candidate
    // is rounding noise (or, in the degenerate case, the worse of the two).
    if next_sq < pp || moved <= STAGNATION_RATIO * pp.sqrt() {
        if kind == StepKind::Advanced {
            state.stagnant_steps += 1;
        }
        state.norm_history.push(pp.sqrt());
        return if kind == StepKind::Advanced { StepKind::Stagnant } else { kind };
    }
    state.p = next;
    state.c = next_sq;
    state.norm_history.push(next_sq.sqrt());
    kind
}

/// One AP version 2 sweep over every block in order, with pre-reduced
/// right-hand sides (see [`BlockFactorization::reduce_rhs`]).
pub fn ap_v2_sweep_reduced(bf: &BlockFactorization, reduced: &[Vec<f64>], state: &mut ApState) {
    for (f, bt) in bf.blocks().iter().zip(reduced) {
        advance_block(f, bt, state);
    }
}

/// One AP version 2 sweep for the system `A x = b`.
pub fn ap_v2_sweep(bf: &BlockFactorization, b: &[f64], mut state: ApState) -> Result<ApState> {
    if state.p.len() != bf.n_cols() {
        return Err(Error::Dimension(format!(
            "state has {} entries, matrix has {} columns",
            state.p.len(),
            bf.n_cols()
        )));
    }
    let reduced = bf.reduce_rhs(b)?;
    ap_v2_sweep_reduced(bf, &reduced, &mut state);
    Ok(state)
}

/// AP version 2: the initial projection followed by `sweeps` sweeps.
pub fn ap_v2<M: MatrixLike + ?Sized>(a: &M, bf: &BlockFactorization, b: &[f64], sweeps: usize) -> Result<ApState> {
    let mut state = initial_projection(a, b)?;
    let reduced = bf.reduce_rhs(b)?;
    for _ in 0..sweeps {
        ap_v2_sweep_reduced(bf, &reduced, &mut state);
    }
    Ok(state)
}

/// Projection of `x` onto `span(cols)` from the inner products
/// `l_k = x^T cols_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanProjection {
    pub v: Vec<f64>,
    /// `x^T v = ||v||^2`.
    pub c: f64,
    /// Columns kept by the rank-revealing factorisation.
    pub rank: usize,
}

/// Projects the unknown `x` onto `span(cols)` knowing only `l = H^T x` with
/// `H = [cols]`. Uses column-pivoted QR of `H` and drops columns whose
/// remaining norm falls to `rel_tol` times the largest; with `H P = Q R` the
/// result is `v = Q R_11^{-T} (P^T l)_{1..rank}`.
pub fn project_onto_span(cols: &[Vec<f64>], l: &[f64], rel_tol: f64) -> Result<SpanProjection> {
    if cols.len() != l.len() {
        return Err(Error::Dimension(format!("{} columns, {} inner products", cols.len(), l.len())));
    }
    if cols.is_empty() {
        return Err(Error::DegenerateSnapshots);
    }
    let h = DenseMatrix::from_columns(cols)?;
    let f = householder_qr_pivoted(&h, rel_tol);
    if f.rank == 0 {
        return Err(Error::DegenerateSnapshots);
    }
    let r11 = DenseMatrix::from_rows(&(0..f.rank).map(|i| f.r.row(i)[..f.rank].to_vec()).collect::<Vec<_>>())?;
    let lp: Vec<f64> = f.perm[..f.rank].iter().map(|&k| l[k]).collect();
    let w = tri_upper_transpose_solve(&r11, &lp)?;
    let mut v = vec![0.0; h.nrows()];
    for (i, vi) in v.iter_mut().enumerate() {
        *vi = dot(f.q.row(i), &w);
    }
    Ok(SpanProjection { v, c: dot(&w, &w), rank: f.rank })
}

/// AP version 1 over a paired factorisation (one factor per union of two
/// neighbouring groups, see [`crate::partition::RowBlockPartition::paired`]):
/// projects `x` onto each pair's row space independently, then onto the span
/// of those projections.
pub fn ap_v1(bf_pairs: &BlockFactorization, b: &[f64], rel_tol: f64) -> Result<SpanProjection> {
    use rayon::prelude::*;
    let reduced = bf_pairs.reduce_rhs(b)?;
    let n = bf_pairs.n_cols();
    let parts: Vec<(Vec<f64>, f64)> = bf_pairs
        .blocks()
        .par_iter()
        .zip(reduced.par_iter())
        .map(|(f, bt)| {
            let mut p = vec![0.0; n];
            f.q_mul_add(1.0, bt, &mut p);
            (p, dot(bt, bt))
        })
        .collect();
    if parts.iter().all(|(_, c)| *c == 0.0) {
        return Ok(SpanProjection { v: vec![0.0; n], c: 0.0, rank: 0 });
    }
    let (cols, l): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    project_onto_span(&cols, &l, rel_tol)
}

/// Result of [`ap_step_direct`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirectStep {
    pub p_next: Vec<f64>,
    pub c_next: f64,
    pub alpha: f64,
    /// `||p_next||^2` from the recurrence
    /// `alpha^2 ||p||^2 + b^T G^{-1} b - alpha^2 (A p)^T G^{-1} (A p)`.
    pub norm_sq_recurrence: f64,
}

fn check_block(block: &DenseMatrix, p: &[f64], rhs: &[f64]) -> Result<()> {
    if block.ncols() != p.len() || block.nrows() != rhs.len() {
        return Err(Error::Dimension(format!(
            "block {}x{}, p has {} entries, rhs has {}",
            block.nrows(),
            block.ncols(),
            p.len(),
            rhs.len()
        )));
    }
    Ok(())
}

fn gram(block: &DenseMatrix) -> DenseMatrix {
    block.matmul(&block.transpose()).expect("conformant")
}

/// One AP step from the normal equations with `G = A_i A_i^T`:
/// `p_next = alpha p + A_i^T u`, `u = G^{-1}(b_i - alpha A_i p)`,
/// `alpha = (c - (A_i p)^T G^{-1} b_i) / (p^T p - (A_i p)^T G^{-1} (A_i p))`.
///
/// `block` holds the rows of `A_i`. Fails with [`Error::DegenerateStep`] when
/// the denominator of `alpha` vanishes, i.e. `p` lies in `ran(A_i^T)`.
pub fn ap_step_direct(block: &DenseMatrix, p: &[f64], c: f64, rhs: &[f64]) -> Result<DirectStep> {
    check_block(block, p, rhs)?;
    let chol = Cholesky::factor(&gram(block))?;
    let ap = spmv(block, p)?;
    let g_ap = chol.solve(&ap)?;
    let g_b = chol.solve(rhs)?;
    let pp = dot(p, p);
    let den = pp - dot(&ap, &g_ap);
    if !(den.abs() >= 1e-14 * pp) || pp == 0.0 {
        return Err(Error::DegenerateStep);
    }
    let alpha = (c - dot(&ap, &g_b)) / den;
    let mut resid = rhs.to_vec();
    axpy(-alpha, &ap, &mut resid);
    let u = chol.solve(&resid)?;
    let mut p_next = transpose_spmv(block, &u)?;
    axpy(alpha, p, &mut p_next);
    let c_next = alpha * c + dot(&u, rhs);
    let norm_sq_recurrence = alpha * alpha * pp + dot(rhs, &g_b) - alpha * alpha * dot(&ap, &g_ap);
    Ok(DirectStep { p_next, c_next, alpha, norm_sq_recurrence })
}

/// Result of [`ap_step_rank1`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Step {
    pub p_next: Vec<f64>,
    pub c_next: f64,
    /// `||p_next||^2 - ||p||^2` from the quadratic form
    /// `(b_i - c d)^T (Ā Ā^T)^{-1} (b_i - c d)`.
    pub norm_growth: f64,
    pub condition: f64,
}

/// `Ā = A_i - d p^T` with `d = A_i p / ||p||^2`: the block rows with their
/// component along `p` removed. For `p = 0` this is `A_i` itself.
pub fn modified_block(block: &DenseMatrix, p: &[f64]) -> Result<(DenseMatrix, Vec<f64>)> {
    if block.ncols() != p.len() {
        return Err(Error::Dimension(format!("block has {} columns, p has {}", block.ncols(), p.len())));
    }
    let pp = dot(p, p);
    let mut bar = block.clone();
    let mut d = vec![0.0; block.nrows()];
    if pp > 0.0 {
        d = spmv(block, p)?;
        d.iter_mut().for_each(|v| *v /= pp);
        for (i, di) in d.iter().enumerate() {
            axpy(-di, p, bar.row_mut(i));
        }
    }
    Ok((bar, d))
}

/// `Ā Ā^T`, singular exactly when `p / ||p||` lies in `ran(A_i^T)`.
pub fn modified_gram(block: &DenseMatrix, p: &[f64]) -> Result<DenseMatrix> {
    Ok(gram(&modified_block(block, p)?.0))
}

/// One AP step through the rank-one modification `Ā = A_i (I - u u^T)`,
/// `u = p / ||p||`: `p_next = p + Ā^T v`, `v = (Ā Ā^T)^{-1} (b_i - c d)`.
///
/// Fails with [`Error::SingularModifiedGram`] when the condition estimate of
/// `Ā Ā^T` exceeds [`MODIFIED_GRAM_COND_LIMIT`].
pub fn ap_step_rank1(block: &DenseMatrix, p: &[f64], c: f64, rhs: &[f64]) -> Result<Rank1Step> {
    check_block(block, p, rhs)?;
    let (bar, d) = modified_block(block, p)?;
    let g = gram(&bar);
    let condition = cond1_estimate_spd(&g);
    if !(condition <= MODIFIED_GRAM_COND_LIMIT) {
        return Err(Error::SingularModifiedGram { condition });
    }
    let mut w = rhs.to_vec();
    axpy(-c, &d, &mut w);
    let v = Cholesky::factor(&g)?.solve(&w)?;
    let mut p_next = transpose_spmv(&bar, &v)?;
    for (a, b) in p_next.iter_mut().zip(p) {
        *a += b;
    }
    let norm_growth = dot(&w, &v);
    Ok(Rank1Step { p_next, c_next: c + norm_growth, norm_growth, condition })
}
