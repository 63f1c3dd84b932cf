use std::f64::consts::PI;

use crate::error::{Result, SpectralError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridKind {
    /// Chebyshev extreme points, endpoints included.
    GaussLobatto,
    /// Chebyshev roots, all interior.
    Gauss,
}

/// Ascending Chebyshev point set on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    kind: GridKind,
    points: Vec<f64>,
}

impl Grid {
    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `n` for a grid of `n + 1` points.
    pub fn degree(&self) -> usize {
        self.points.len() - 1
    }
}

/// `n + 1` ascending Chebyshev points of the requested kind.
///
/// Points are computed as sines of symmetric angles so that the grid is
/// exactly symmetric about 0 and the Gauss-Lobatto endpoints are exactly
/// `-1` and `1`.
pub fn cheb_points(n: usize, kind: GridKind) -> Result<Grid> {
    let points = angle_fractions(n, kind)?
        .map(|(a, b)| (PI * a / b).sin())
        .collect();
    Ok(Grid { kind, points })
}

/// `x_j - fl(x_j)` for the points of [`cheb_points`]: the exact Chebyshev
/// point minus its rounded value, to about double-double accuracy.
pub fn cheb_point_residuals(n: usize, kind: GridKind) -> Result<Vec<f64>> {
    // rounded points come from cheb_points itself: a sine recomputed here
    // may be fused with the cosine below into a sincos that rounds differently
    let grid = cheb_points(n, kind)?;
    Ok(angle_fractions(n, kind)?
        .zip(grid.points())
        .map(|((a, b), &x)| {
            let theta = PI * a / b;
            let exact = dd_div(dd_mul(PI_DD, (a, 0.0)), b);
            let dtheta = (exact.0 - theta) + exact.1;
            let s = sin_dd(theta);
            (s.0 - x) + s.1 + theta.cos() * dtheta
        })
        .collect())
}

/// Point `j` is `sin(pi a_j / b)`.
fn angle_fractions(n: usize, kind: GridKind) -> Result<impl Iterator<Item = (f64, f64)>> {
    if n == 0 {
        return Err(SpectralError::InvalidArgument(
            "a Chebyshev grid needs n >= 1".into(),
        ));
    }
    let nf = n as f64;
    // -cos(j pi / n) = sin(pi (2j - n) / (2n))
    // -cos((2j + 1) pi / (2n + 2)) = sin(pi (2j - n) / (2n + 2))
    let b = match kind {
        GridKind::GaussLobatto => 2.0 * nf,
        GridKind::Gauss => 2.0 * nf + 2.0,
    };
    Ok((0..=n).map(move |j| (2.0 * j as f64 - nf, b)))
}

type Dd = (f64, f64);

const PI_DD: Dd = (PI, 1.224_646_799_147_353_2e-16);

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    (s, b - (s - a))
}

fn dd_add(a: Dd, b: Dd) -> Dd {
    let s = a.0 + b.0;
    let bb = s - a.0;
    let e = (a.0 - (s - bb)) + (b.0 - bb);
    quick_two_sum(s, e + a.1 + b.1)
}

fn dd_mul(a: Dd, b: Dd) -> Dd {
    let p = a.0 * b.0;
    let e = a.0.mul_add(b.0, -p) + (a.0 * b.1 + a.1 * b.0);
    quick_two_sum(p, e)
}

fn dd_div(a: Dd, b: f64) -> Dd {
    let q = a.0 / b;
    let r = (-q).mul_add(b, a.0) + a.1;
    quick_two_sum(q, r / b)
}

/// `sin t` for `|t| <= pi/2` by its Taylor series in double-double.
fn sin_dd(t: f64) -> Dd {
    let t2 = dd_mul((t, 0.0), (t, 0.0));
    let mut term = (t, 0.0);
    let mut sum = term;
    for k in 1..=20 {
        term = dd_div(dd_mul(term, t2), -((2 * k) * (2 * k + 1)) as f64);
        sum = dd_add(sum, term);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grids() {
        assert_eq!(cheb_points(1, GridKind::GaussLobatto).unwrap().points(), &[-1.0, 1.0]);
        assert_eq!(
            cheb_points(2, GridKind::GaussLobatto).unwrap().points(),
            &[-1.0, 0.0, 1.0]
        );
        let g = cheb_points(1, GridKind::Gauss).unwrap();
        let h = (PI / 4.0).cos();
        assert!((g.points()[0] + h).abs() < 2e-16);
        assert!((g.points()[1] - h).abs() < 2e-16);
        assert!(cheb_points(0, GridKind::Gauss).is_err());
    }

    #[test]
    fn matches_cosine_formula() {
        for n in [3usize, 8, 33, 100] {
            let gl = cheb_points(n, GridKind::GaussLobatto).unwrap();
            let ga = cheb_points(n, GridKind::Gauss).unwrap();
            for j in 0..=n {
                let a = -(j as f64 * PI / n as f64).cos();
                let b = -((2 * j + 1) as f64 * PI / (2 * n + 2) as f64).cos();
                assert!((gl.points()[j] - a).abs() < 4e-16);
                assert!((ga.points()[j] - b).abs() < 4e-16);
            }
            assert_eq!(gl.points()[0], -1.0);
            assert_eq!(gl.points()[n], 1.0);
            assert!(ga.points().windows(2).all(|w| w[0] < w[1]));
            assert!(ga.points().iter().all(|x| x.abs() < 1.0));
        }
    }

    #[test]
    fn residuals_recover_exact_points() {
        // cos(pi/3) = 1/2 and cos(pi/6) = sqrt(3)/2 in double-double
        let g = cheb_points(6, GridKind::GaussLobatto).unwrap();
        let r = cheb_point_residuals(6, GridKind::GaussLobatto).unwrap();
        assert!(r[0].abs() < 1e-31);
        assert_eq!(r[3], 0.0);
        assert!((g.points()[4] + r[4] - 0.5).abs() < 1e-31);
        let s3 = 3f64.sqrt();
        let s3_lo = (-s3).mul_add(s3, 3.0) / (2.0 * s3);
        let err = (g.points()[5] - 0.5 * s3) + r[5] - 0.5 * s3_lo;
        assert!(err.abs() < 1e-30, "{err:e}");
        let big = cheb_point_residuals(1 << 12, GridKind::Gauss).unwrap();
        assert!(big.iter().all(|v| v.abs() <= 2.3e-16));
    }
}
