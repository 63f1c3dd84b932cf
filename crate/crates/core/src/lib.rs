//! Well-conditioned spectral methods for linear ordinary differential equations
//!
//! ```text
//! u^(m)(x) + a^{m-1}(x) u^(m-1)(x) + ... + a^0(x) u(x) = f(x),   x in [-1, 1],
//! B u = b   (m linear constraints)
//! ```
//!
//! Three discretizations are provided:
//!
//! - [`integral`]: a Chebyshev spectral method applied to the integral
//!   reformulation in the unknown `v = u^(m)`. The truncated operator is
//!   identity plus a compact perturbation, almost banded, and its condition
//!   number does not grow with the truncation size.
//! - [`ultraspherical`]: the ultraspherical spectral method (US) and its
//!   diagonally right-preconditioned variant (P-US).
//! - [`collocation`]: rectangular spectral collocation, right-preconditioned
//!   with the Birkhoff pseudospectral integration matrix.
//!
//! Everything is built on [`cheb`] (Chebyshev grids, transforms, quadrature),
//! [`operators`] (truncated coefficient-space operators in almost-banded form,
//! fast Toeplitz-plus-Hankel products) and [`solvers`] (almost-banded Givens
//! QR, dense QR, Bi-CGSTAB, condition numbers).
//!
//! ```
//! use specsolve_core::prelude::*;
//!
//! // u' = 0, u(-1) = 3
//! let problem = OdeProblem::new(
//!     vec![ChebSeries::zero()],
//!     ChebSeries::zero(),
//!     ConstraintSet::new(vec![ConstraintFunctional::point(-1.0)]),
//!     vec![3.0],
//! )
//! .unwrap();
//! let sol = solve_cs(&problem, &CsOptions::fixed(8)).unwrap();
//! assert!((sol.u.eval(0.2).unwrap() - 3.0).abs() < 1e-14);
//! ```

pub mod cheb;
pub mod collocation;
pub mod error;
pub mod integral;
pub mod operators;
pub mod problem;
pub mod solvers;
pub mod ultraspherical;

pub use error::{Result, SpectralError};

pub mod prelude {
    pub use crate::cheb::{Basis, ChebSeries, Grid, GridKind};
    pub use crate::error::{Result, SpectralError};
    pub use crate::integral::{solve_cs, CsOptions, CsSolution};
    pub use crate::operators::{AlmostBandedMatrix, LinearOperator, OperatorTruncation};
    pub use crate::problem::{ConstraintFunctional, ConstraintSet, OdeProblem};
    pub use crate::solvers::{Backend, SolveDiagnostics};
    pub use crate::ultraspherical::{solve_us, UsOptions, UsSolution, UsVariant};
}
