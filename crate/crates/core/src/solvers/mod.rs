//! Linear-system backends and condition numbers.
//!
//! - [`almost_banded_qr_solve`]: Givens QR for almost-banded systems in
//!   `O(n l (l + u + r))` operations.
//! - [`dense_qr_solve`] / [`dense_lu_solve`]: dense reference solvers.
//! - [`bicgstab_solve`]: unpreconditioned Bi-CGSTAB on any
//!   [`LinearOperator`](crate::operators::LinearOperator).
//! - [`cond2_estimate`]: 2-norm condition numbers.
//! - [`adaptive_solve`]: grows the truncation until the solution tail decays.

mod adaptive;
mod banded_qr;
mod bicgstab;
mod cond;
mod dense;

use std::fmt;

pub use adaptive::{adaptive_solve, tail_converged, AdaptiveOptions};
pub use banded_qr::almost_banded_qr_solve;
pub use bicgstab::{bicgstab_solve, BicgstabOutcome};
pub use cond::{cond2_estimate, cond2_lanczos, cond2_svd, LANCZOS_THRESHOLD};
pub use dense::{dense_lu_solve, dense_qr_solve, residual_inf};

/// Which linear solver to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Pick per system from its size and structure.
    Auto,
    AlmostBandedQr,
    DenseQr,
    DenseLu,
    BiCgStab,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Backend::Auto => "auto",
            Backend::AlmostBandedQr => "almost-banded-qr",
            Backend::DenseQr => "dense-qr",
            Backend::DenseLu => "dense-lu",
            Backend::BiCgStab => "bicgstab",
        };
        f.write_str(s)
    }
}

/// Summary of one linear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub n_used: usize,
    pub method: Backend,
    /// Iteration count for iterative solvers.
    pub iterations: Option<usize>,
    /// `‖A x - b‖_∞` recomputed from the system and the returned solution.
    pub residual_inf: f64,
    pub cond2: Option<f64>,
}

impl SolveDiagnostics {
    pub fn new(n_used: usize, method: Backend, residual_inf: f64) -> Self {
        Self {
            n_used,
            method,
            iterations: None,
            residual_inf,
            cond2: None,
        }
    }
}

impl fmt::Display for SolveDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n_used: {}", self.n_used)?;
        writeln!(f, "method: {}", self.method)?;
        match self.iterations {
            Some(k) => writeln!(f, "iterations: {k}")?,
            None => writeln!(f, "iterations: null")?,
        }
        writeln!(f, "residual_inf: {:e}", self.residual_inf)?;
        match self.cond2 {
            Some(c) => writeln!(f, "cond2: {c:.5e}"),
            None => writeln!(f, "cond2: null"),
        }
    }
}
