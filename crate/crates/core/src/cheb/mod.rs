//! Chebyshev grids, coefficient transforms, series evaluation, adaptive
//! approximation and Clenshaw-Curtis quadrature.

mod approx;
mod grid;
mod quadrature;
mod series;
mod transform;

pub use approx::{adaptive_approx, adaptive_approx_refined, adaptive_approx_with, ApproxOptions};
pub use grid::{cheb_point_residuals, cheb_points, Grid, GridKind};
pub use quadrature::{
    cc_integrate, cc_weights, gauss_legendre, integral_functional_row, GaussLegendre,
};
pub use series::{clenshaw_eval, monomial_coeffs, Basis, ChebSeries};
pub(crate) use series::derivative_coeffs;
pub use transform::{
    coeffs_to_vals, fold_to_grid, vals_to_coeffs, ChebTransform,
};
