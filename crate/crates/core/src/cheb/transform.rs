use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{Grid, GridKind};
use super::series::{clenshaw_t, ChebSeries};
use crate::error::{Result, SpectralError};

/// Cached FFT plans for the Chebyshev transform pair on one grid.
///
/// On a Gauss-Lobatto grid of `N + 1` points the pair is a type-I DCT
/// (FFT of length `2N`); on a Gauss grid of `K` points it is the type-II /
/// type-III DCT pair (FFT of length `2K`).
#[derive(Clone)]
pub struct ChebTransform {
    len: usize,
    kind: GridKind,
    fwd: Option<Arc<dyn Fft<f64>>>,
    inv: Option<Arc<dyn Fft<f64>>>,
    // exp(i pi k / (2K)) for the Gauss grid
    twiddle: Vec<Complex64>,
}

impl std::fmt::Debug for ChebTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChebTransform")
            .field("len", &self.len)
            .field("kind", &self.kind)
            .finish()
    }
}

impl ChebTransform {
    /// Plans for a grid with `len` points.
    pub fn new(len: usize, kind: GridKind) -> Result<Self> {
        if len == 0 {
            return Err(SpectralError::InvalidArgument(
                "transform length must be positive".into(),
            ));
        }
        let mut planner = FftPlanner::new();
        let (fwd, inv, twiddle) = match kind {
            GridKind::GaussLobatto if len == 1 => (None, None, Vec::new()),
            GridKind::GaussLobatto => {
                let m = 2 * (len - 1);
                (Some(planner.plan_fft_forward(m)), None, Vec::new())
            }
            GridKind::Gauss => {
                let m = 2 * len;
                let tw = (0..len)
                    .map(|k| Complex64::from_polar(1.0, PI * k as f64 / m as f64))
                    .collect();
                (
                    Some(planner.plan_fft_forward(m)),
                    Some(planner.plan_fft_inverse(m)),
                    tw,
                )
            }
        };
        Ok(Self {
            len,
            kind,
            fwd,
            inv,
            twiddle,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Chebyshev coefficients (length `len`) of the interpolant of `vals`.
    pub fn vals_to_coeffs(&self, vals: &[f64]) -> Vec<f64> {
        assert_eq!(vals.len(), self.len, "value count does not match the plan");
        let k = self.len;
        if k == 1 {
            return vals.to_vec();
        }
        let fft = self.fwd.as_ref().expect("planned");
        match self.kind {
            GridKind::GaussLobatto => {
                let n = k - 1;
                let mut buf: Vec<Complex64> = Vec::with_capacity(2 * n);
                buf.extend(vals.iter().map(|&v| Complex64::new(v, 0.0)));
                buf.extend(vals[1..n].iter().rev().map(|&v| Complex64::new(v, 0.0)));
                fft.process(&mut buf);
                let nf = n as f64;
                let mut c: Vec<f64> = (0..=n)
                    .map(|j| {
                        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                        s * buf[j].re / nf
                    })
                    .collect();
                c[0] *= 0.5;
                c[n] *= 0.5;
                c
            }
            GridKind::Gauss => {
                let mut buf: Vec<Complex64> = Vec::with_capacity(2 * k);
                buf.extend(vals.iter().map(|&v| Complex64::new(v, 0.0)));
                buf.extend(vals.iter().rev().map(|&v| Complex64::new(v, 0.0)));
                fft.process(&mut buf);
                let kf = k as f64;
                let mut c: Vec<f64> = (0..k)
                    .map(|j| {
                        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                        // sum_i v_i cos(j theta_i) = Re(Y_j e^{-i pi j / 2K}) / 2
                        let sum = (buf[j] * self.twiddle[j].conj()).re * 0.5;
                        s * 2.0 * sum / kf
                    })
                    .collect();
                c[0] *= 0.5;
                c
            }
        }
    }

    /// Values at the grid of the Chebyshev series with coefficients `coeffs`.
    /// Coefficients beyond the grid resolution are folded by aliasing, which
    /// is exact on the grid.
    pub fn coeffs_to_vals(&self, coeffs: &[f64]) -> Vec<f64> {
        let k = self.len;
        let folded;
        let c: &[f64] = if coeffs.len() > k {
            folded = fold_to_grid(coeffs, k, self.kind);
            &folded
        } else {
            coeffs
        };
        if k == 1 {
            return vec![c.first().copied().unwrap_or(0.0)];
        }
        match self.kind {
            GridKind::GaussLobatto => {
                let n = k - 1;
                let mut e = vec![0.0; n + 1];
                for (j, &cj) in c.iter().enumerate() {
                    let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                    e[j] = s * cj;
                }
                e[0] *= 2.0;
                e[n] *= 2.0;
                let mut buf: Vec<Complex64> = Vec::with_capacity(2 * n);
                buf.extend(e.iter().map(|&v| Complex64::new(v, 0.0)));
                buf.extend(e[1..n].iter().rev().map(|&v| Complex64::new(v, 0.0)));
                self.fwd.as_ref().expect("planned").process(&mut buf);
                (0..=n).map(|j| 0.5 * buf[j].re).collect()
            }
            GridKind::Gauss => {
                let mut buf = vec![Complex64::new(0.0, 0.0); 2 * k];
                for (j, &cj) in c.iter().enumerate() {
                    let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                    buf[j] = self.twiddle[j] * (s * cj);
                }
                self.inv.as_ref().expect("planned").process(&mut buf);
                buf[..k].iter().map(|z| z.re).collect()
            }
        }
    }
}

/// Folds a coefficient vector onto the first `len` Chebyshev polynomials
/// using the aliasing identities of the given grid, so that the result has
/// identical values at the `len` grid points.
pub fn fold_to_grid(coeffs: &[f64], len: usize, kind: GridKind) -> Vec<f64> {
    let mut out = vec![0.0; len];
    match kind {
        GridKind::GaussLobatto => {
            if len == 1 {
                // single point: only meaningful as a constant
                out[0] = coeffs.iter().sum();
                return out;
            }
            let n = len - 1;
            let period = 2 * n;
            for (k, &ck) in coeffs.iter().enumerate() {
                let mut r = k % period;
                if r > n {
                    r = period - r;
                }
                out[r] += ck;
            }
        }
        GridKind::Gauss => {
            let kk = len;
            let period = 4 * kk;
            for (k, &ck) in coeffs.iter().enumerate() {
                let r = k % period;
                // cos(k theta) == sign * cos(target theta) on the grid
                let (target, sign) = if r < kk {
                    (r, 1.0)
                } else if r == kk || r == 3 * kk {
                    continue;
                } else if r < 2 * kk {
                    (2 * kk - r, -1.0)
                } else if r < 3 * kk {
                    (r - 2 * kk, -1.0)
                } else {
                    (4 * kk - r, 1.0)
                };
                // T_k(x_j) = (-1)^k cos(k theta_j)
                let parity = if (k + target) % 2 == 0 { 1.0 } else { -1.0 };
                out[target] += ck * sign * parity;
            }
        }
    }
    out
}

/// Chebyshev coefficients of the polynomial interpolating `values` at the
/// ascending Gauss-Lobatto grid with `values.len()` points.
pub fn vals_to_coeffs(values: &[f64]) -> Result<ChebSeries> {
    if values.is_empty() {
        return Err(SpectralError::InvalidArgument(
            "no values to transform".into(),
        ));
    }
    let t = ChebTransform::new(values.len(), GridKind::GaussLobatto)?;
    ChebSeries::chebyshev(t.vals_to_coeffs(values))
}

/// Values of a Chebyshev-T series at the points of `grid`.
pub fn coeffs_to_vals(series: &ChebSeries, grid: &Grid) -> Result<Vec<f64>> {
    if series.basis() != super::Basis::ChebyshevT {
        return Err(SpectralError::BasisMismatch(format!(
            "grid evaluation needs a Chebyshev T series, got {}",
            series.basis()
        )));
    }
    if grid.len() == 1 {
        return Ok(vec![clenshaw_t(series.coeffs(), grid.points()[0])]);
    }
    let t = ChebTransform::new(grid.len(), grid.kind())?;
    Ok(t.coeffs_to_vals(series.coeffs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::cheb_points;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn basic_examples() {
        let c = vals_to_coeffs(&[1.0, -1.0, 1.0]).unwrap();
        assert!(close(c.coeffs(), &[0.0, 0.0, 1.0], 1e-15));
        let c = vals_to_coeffs(&[5.0, 5.0, 5.0]).unwrap();
        assert!(close(c.coeffs(), &[5.0, 0.0, 0.0], 1e-15));
        let c = vals_to_coeffs(&[1.0, 0.0, 1.0]).unwrap();
        assert!(close(c.coeffs(), &[0.5, 0.0, 0.5], 1e-15));
        assert!(vals_to_coeffs(&[]).is_err());
        assert_eq!(vals_to_coeffs(&[2.5]).unwrap().coeffs(), &[2.5]);
    }

    #[test]
    fn gauss_pair_matches_clenshaw() {
        let c: Vec<f64> = (0..13).map(|j| 1.0 / (1.0 + j as f64)).collect();
        let g = cheb_points(12, GridKind::Gauss).unwrap();
        let t = ChebTransform::new(13, GridKind::Gauss).unwrap();
        let v = t.coeffs_to_vals(&c);
        for (x, vx) in g.points().iter().zip(&v) {
            assert!((clenshaw_t(&c, *x) - vx).abs() < 1e-14);
        }
        let back = t.vals_to_coeffs(&v);
        assert!(close(&back, &c, 1e-14));
    }

    #[test]
    fn folding_is_exact_on_grid() {
        let c: Vec<f64> = (0..40).map(|j| ((j * 7 % 11) as f64 - 5.0) / 7.0).collect();
        for kind in [GridKind::GaussLobatto, GridKind::Gauss] {
            let g = cheb_points(9, kind).unwrap();
            let s = ChebSeries::chebyshev(c.clone()).unwrap();
            let v = coeffs_to_vals(&s, &g).unwrap();
            for (x, vx) in g.points().iter().zip(&v) {
                assert!((clenshaw_t(&c, *x) - vx).abs() < 1e-13, "{kind:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip(c in proptest::collection::vec(-1.0f64..1.0, 2..600), gauss in any::<bool>()) {
            let kind = if gauss { GridKind::Gauss } else { GridKind::GaussLobatto };
            let t = ChebTransform::new(c.len(), kind).unwrap();
            let vals = t.coeffs_to_vals(&c);
            let back = t.vals_to_coeffs(&vals);
            let again = t.coeffs_to_vals(&back);
            let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            for (a, b) in vals.iter().zip(&again) {
                prop_assert!((a - b).abs() <= 1e3 * f64::EPSILON * scale);
            }
        }
    }

    #[test]
    fn round_trip_long() {
        let c: Vec<f64> = (0..4097).map(|j| ((j * 31 % 17) as f64 - 8.0) / 9.0).collect();
        let t = ChebTransform::new(4097, GridKind::GaussLobatto).unwrap();
        let vals = t.coeffs_to_vals(&c);
        let back = t.vals_to_coeffs(&vals);
        let again = t.coeffs_to_vals(&back);
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in vals.iter().zip(&again) {
            assert!((a - b).abs() <= 1e3 * f64::EPSILON * scale);
        }
    }
}
