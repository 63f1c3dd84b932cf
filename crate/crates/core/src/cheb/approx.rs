use super::grid::GridKind;
use super::series::ChebSeries;
use super::transform::ChebTransform;
use super::{cheb_point_residuals, cheb_points, Basis};
use crate::error::{Result, SpectralError};

/// Controls for [`adaptive_approx_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxOptions {
    /// Relative chopping tolerance.
    pub tol: f64,
    /// First grid has `2^min_log2 + 1` points.
    pub min_log2: u32,
    /// Last grid tried has `2^max_log2 + 1` points.
    pub max_log2: u32,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            min_log2: 3,
            max_log2: 18,
        }
    }
}

impl ApproxOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Chebyshev approximation of `f` on `[-1, 1]` to relative tolerance `tol`.
///
/// Samples on Gauss-Lobatto grids of `2^k + 1` points for increasing `k`,
/// and accepts the first grid whose last three coefficients are all below
/// `tol * max|c|`; the result is chopped after its last coefficient above
/// that threshold.
pub fn adaptive_approx(f: impl Fn(f64) -> f64, tol: f64) -> Result<ChebSeries> {
    adaptive_approx_with(|x| Ok(f(x)), ApproxOptions::with_tol(tol))
}

/// Fallible-sampler variant of [`adaptive_approx`]. A sampler error or a
/// non-finite sample aborts the approximation.
pub fn adaptive_approx_with(
    mut f: impl FnMut(f64) -> Result<f64>,
    opts: ApproxOptions,
) -> Result<ChebSeries> {
    adaptive_approx_refined(|x, _| f(x), opts)
}

/// [`adaptive_approx_with`] for samplers that accept the grid point as
/// `x + dx`, where `dx` is the rounding residual of `x` (see
/// [`cheb_point_residuals`](super::cheb_point_residuals)). Functions with
/// large derivatives lose `|f'(x)| * |dx|` when sampled at the rounded point.
pub fn adaptive_approx_refined(
    mut f: impl FnMut(f64, f64) -> Result<f64>,
    opts: ApproxOptions,
) -> Result<ChebSeries> {
    if !(opts.tol > 0.0) {
        return Err(SpectralError::InvalidArgument(format!(
            "approximation tolerance must be positive, got {}",
            opts.tol
        )));
    }
    for k in opts.min_log2..=opts.max_log2 {
        let n = 1usize << k;
        let grid = cheb_points(n, GridKind::GaussLobatto)?;
        let dx = cheb_point_residuals(n, GridKind::GaussLobatto)?;
        let mut vals = Vec::with_capacity(n + 1);
        for (&x, &d) in grid.points().iter().zip(&dx) {
            let v = f(x, d)?;
            if !v.is_finite() {
                return Err(SpectralError::InvalidArgument(format!(
                    "function value at x = {x} is not finite ({v})"
                )));
            }
            vals.push(v);
        }
        let c = ChebTransform::new(n + 1, GridKind::GaussLobatto)?.vals_to_coeffs(&vals);
        let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if cmax == 0.0 {
            return Ok(ChebSeries::zero());
        }
        let thresh = opts.tol * cmax;
        if c[n - 2..].iter().all(|v| v.abs() < thresh) {
            let last = c.iter().rposition(|v| v.abs() >= thresh).unwrap_or(0);
            return ChebSeries::new(c[..=last].to_vec(), Basis::ChebyshevT);
        }
    }
    Err(SpectralError::ResolutionFailure(format!(
        "function not resolved on {} points at relative tolerance {:e}",
        (1usize << opts.max_log2) + 1,
        opts.tol
    )))
}
