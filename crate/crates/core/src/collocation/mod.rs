//! Rectangular spectral collocation right-preconditioned with the Birkhoff
//! pseudospectral integration matrix (PSIM).
//!
//! Unknown values of `u` live on `N + 1` Gauss-Lobatto points `x`, the
//! equation is collocated on `M + 1 = N + 1 - m` Gauss points `y`, and the
//! `m` constraints fill the remaining rows. Substituting
//! `u = B^(-m)_{y -> x} [v; b]` leaves an `(M + 1)`-square system for
//! `v ≈ u^(m)(y)` whose condition number does not grow with `M`.

mod barycentric;
mod method;
mod psim;

pub use barycentric::{
    bary_weights, diff_matrix, eval_row, grid_diff_matrix, grid_rect_diff_matrix,
    grid_resampling_matrix, rect_diff_matrix, resampling_matrix,
};
pub use method::{
    assemble_collocation, precondition_solve, preconditioned_system, solve_collocation,
    CollocationOptions, CollocationSolution, PsimOperator,
};
pub use psim::{
    birkhoff_psim, constraint_disc, gauss_lagrange_coeffs, theorem_identity_check,
    theorem_identity_check_spectral, PointPair, PsimBundle,
};
