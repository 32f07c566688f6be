//! Accumulated projection solvers for linear systems `Ax = b`.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense and CSR matrices, Householder QR, triangular and
//!   Cholesky solves, Matrix Market I/O.
//! - [`partition`]: row-block divisions of `A` and the cached per-block
//!   orthogonal factors used to project onto `ran(A_i^T)` cheaply.
//! - [`ap`]: the accumulated projection kernel (AP version 1 and 2) together
//!   with the single-step constructions used as cross-checks.
//! - [`solvers`]: the outer iterations PAP and APAP.
//! - [`baselines`]: block Jacobi and restarted GMRES(m).
//! - [`problems`]: generators for the test matrices and manufactured solutions.

// Tolerance checks are written as `!(x <= tol)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ap;
pub mod baselines;
pub mod error;
pub mod linalg;
pub mod partition;
pub mod problems;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{AnyMatrix, CsrMatrix, DenseMatrix, MatrixLike};
pub use solvers::{SolveReport, SolverConfig, Termination};
