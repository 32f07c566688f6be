//! Row-block divisions of `A` and their cached orthogonal factors.
//!
//! Each block `A_i` (a contiguous range of rows) is factored once as
//! `A_i^T = Q_i R_i`. Afterwards the projection of the solution `x` onto
//! `ran(A_i^T)` is `Q_i R_i^{-T} b_i`, which costs one triangular solve and one
//! product with `Q_i`.
//!
//! `A_i^T` is zero outside the columns touched by the block's rows, so `Q_i` is
//! stored compressed to that support; for banded or stencil matrices this
//! keeps every block projection proportional to the block size rather than
//! to `n`.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, tri_upper_transpose_solve, DenseMatrix, MatrixLike};

/// A division of the rows `0..n_rows` into contiguous groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowBlockPartition {
    ranges: Vec<Range<usize>>,
    overlapped: bool,
    n_rows: usize,
}

/// Divides `n_rows` rows into blocks of at most `block_size` rows.
///
/// With `overlapped`, consecutive blocks share `block_size / 2` rows (stride
/// `block_size - block_size / 2`) and blocks are emitted until one reaches the
/// last row. Without it the blocks are disjoint. A short trailing block is
/// kept as is.
pub fn make_partition(n_rows: usize, block_size: usize, overlapped: bool) -> Result<RowBlockPartition> {
    if block_size == 0 || block_size > n_rows {
        return Err(Error::Partition(format!("block size {block_size} must lie in 1..={n_rows}")));
    }
    let stride = if overlapped { block_size - block_size / 2 } else { block_size };
    let mut ranges = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + block_size).min(n_rows);
        ranges.push(start..end);
        if end == n_rows {
            break;
        }
        start += stride;
    }
    Ok(RowBlockPartition { ranges, overlapped, n_rows })
}

impl RowBlockPartition {
    /// Builds a partition from explicit ranges, checking that they cover
    /// `0..n_rows` in order.
    pub fn from_ranges(n_rows: usize, ranges: Vec<Range<usize>>, overlapped: bool) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::Partition("no blocks".into()));
        }
        let mut covered = 0;
        for r in &ranges {
            if r.start >= r.end || r.end > n_rows {
                return Err(Error::Partition(format!("bad block {r:?} for {n_rows} rows")));
            }
            if r.start > covered {
                return Err(Error::Partition(format!("rows {covered}..{} are not covered", r.start)));
            }
            if !overlapped && r.start < covered {
                return Err(Error::Partition(format!("block {r:?} overlaps its predecessor")));
            }
            covered = covered.max(r.end);
        }
        if covered != n_rows {
            return Err(Error::Partition(format!("rows {covered}..{n_rows} are not covered")));
        }
        Ok(RowBlockPartition { ranges, overlapped, n_rows })
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn overlapped(&self) -> bool {
        self.overlapped
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Unions of consecutive blocks, `G_i = [A_i; A_{i+1}]`, for the paired
    /// projections of AP version 1. Needs at least two blocks.
    pub fn paired(&self) -> Result<RowBlockPartition> {
        if self.ranges.len() < 2 {
            return Err(Error::Partition("pairing needs at least two blocks".into()));
        }
        let ranges = self.ranges.windows(2).map(|w| w[0].start.min(w[1].start)..w[0].end.max(w[1].end)).collect();
        Ok(RowBlockPartition { ranges, overlapped: true, n_rows: self.n_rows })
    }
}

/// Orthogonal factors of one block, `A_i^T = Q_i R_i`, restricted to the
/// block's column support.
#[derive(Debug, Clone)]
pub struct BlockFactor {
    rows: Range<usize>,
    support: Vec<usize>,
    /// `|support| x m_i`
    q: DenseMatrix,
    /// `m_i x m_i`, upper triangular
    r: DenseMatrix,
}

impl BlockFactor {
    pub fn rows(&self) -> Range<usize> {
        self.rows.clone()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorted column indices where `Q_i` may be nonzero.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn q_compressed(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// `Q_i` expanded to `n x m_i`.
    pub fn q_full(&self, n: usize) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(n, self.len());
        for (k, &j) in self.support.iter().enumerate() {
            out.row_mut(j).copy_from_slice(self.q.row(k));
        }
        out
    }

    /// `b̃_i = R_i^{-T} rhs_i`, the coordinates of the block projection in
    /// the basis `Q_i`.
    pub fn reduce_rhs(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.len() {
            return Err(Error::Dimension(format!(
                "block has {} rows, right-hand side has {} entries",
                self.len(),
                rhs.len()
            )));
        }
        tri_upper_transpose_solve(&self.r, rhs)
    }

    /// `Q_i^T v` for a full-length `v`.
    pub fn qt_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (k, &j) in self.support.iter().enumerate() {
            let vj = v[j];
            if vj != 0.0 {
                for (o, q) in out.iter_mut().zip(self.q.row(k)) {
                    *o += q * vj;
                }
            }
        }
        out
    }

    /// `out += alpha * Q_i z` for a full-length `out`.
    pub fn q_mul_add(&self, alpha: f64, z: &[f64], out: &mut [f64]) {
        for (k, &j) in self.support.iter().enumerate() {
            let s: f64 = self.q.row(k).iter().zip(z).map(|(q, zk)| q * zk).sum();
            out[j] += alpha * s;
        }
    }
}

/// Cached factors for every block of a partition.
#[derive(Debug, Clone)]
pub struct BlockFactorization {
    n_cols: usize,
    partition: RowBlockPartition,
    blocks: Vec<BlockFactor>,
}

fn factor_block<M: MatrixLike + ?Sized>(a: &M, rows: Range<usize>, index: usize) -> Result<BlockFactor> {
    let support = a.row_support(rows.clone());
    let m = rows.len();
    if support.len() < m {
        // Fewer nonzero columns than rows: the rows cannot be independent.
        return Err(Error::RankDeficient { column: support.len(), block: Some(index) });
    }
    // Compressed A_i^T: one row per support column, one column per block row.
    let mut at = DenseMatrix::zeros(support.len(), m);
    for (bi, i) in rows.clone().enumerate() {
        a.for_each_in_row(i, &mut |j, v| {
            let k = support.binary_search(&j).expect("support contains every stored column");
            at[(k, bi)] = v;
        });
    }
    let f = householder_qr(&at).map_err(|e| match e {
        Error::RankDeficient { column, .. } => Error::RankDeficient { column, block: Some(index) },
        other => other,
    })?;
    Ok(BlockFactor { rows, support, q: f.q, r: f.r })
}

/// Factors every block of `partition`, in parallel.
///
/// Fails with [`Error::RankDeficient`] (carrying the block index) when a
/// block's rows are numerically dependent.
pub fn factorize_blocks<M: MatrixLike + ?Sized>(a: &M, partition: &RowBlockPartition) -> Result<BlockFactorization> {
    if partition.n_rows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "partition covers {} rows, matrix has {}",
            partition.n_rows(),
            a.nrows()
        )));
    }
    let blocks = partition
        .blocks()
        .par_iter()
        .enumerate()
        .map(|(i, r)| factor_block(a, r.clone(), i))
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockFactorization { n_cols: a.ncols(), partition: partition.clone(), blocks })
}

impl BlockFactorization {
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn partition(&self) -> &RowBlockPartition {
        &self.partition
    }

    pub fn blocks(&self) -> &[BlockFactor] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &BlockFactor {
        &self.blocks[i]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `R_i^{-T} b_i` for every block.
    pub fn reduce_rhs(&self, b: &[f64]) -> Result<Vec<Vec<f64>>> {
        if b.len() != self.partition.n_rows() {
            return Err(Error::Dimension(format!(
                "right-hand side has {} entries, matrix has {} rows",
                b.len(),
                self.partition.n_rows()
            )));
        }
        self.blocks.iter().map(|f| f.reduce_rhs(&b[f.rows()])).collect()
    }
}

/// Projection of the solution onto `ran(A_i^T)` given `rhs_i = A_i x`:
/// returns `p = Q_i R_i^{-T} rhs_i` and `c = x^T p = ||R_i^{-T} rhs_i||^2`.
pub fn project_onto_block(bf: &BlockFactorization, i: usize, rhs_i: &[f64]) -> Result<(Vec<f64>, f64)> {
    let f = bf.blocks.get(i).ok_or_else(|| Error::InvalidArgument(format!("block {i} out of range")))?;
    let bt = f.reduce_rhs(rhs_i)?;
    let mut p = vec![0.0; bf.n_cols];
    f.q_mul_add(1.0, &bt, &mut p);
    let c = bt.iter().map(|v| v * v).sum();
    Ok((p, c))
}
