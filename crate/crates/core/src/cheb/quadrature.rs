use std::f64::consts::PI;

use super::grid::GridKind;
use super::transform::ChebTransform;
use crate::error::{Result, SpectralError};

/// Clenshaw-Curtis weights for the ascending `(n + 1)`-point Gauss-Lobatto
/// grid; exact for polynomials of degree at most `n`.
pub fn cc_weights(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(SpectralError::InvalidArgument(
            "Clenshaw-Curtis weights need n >= 1".into(),
        ));
    }
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let mut v = vec![1.0; n.saturating_sub(1)];
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                let th = (i + 1) as f64 * PI / nf;
                *vi -= 2.0 * (2.0 * kf * th).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            let th = (i + 1) as f64 * PI / nf;
            *vi -= (nf * th).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                let th = (i + 1) as f64 * PI / nf;
                *vi -= 2.0 * (2.0 * kf * th).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    Ok(w)
}

/// Row of `∫_{-1}^{1} T_j`: `2 / (1 - j^2)` for even `j`, 0 for odd `j`.
pub fn integral_functional_row(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            if j % 2 == 1 {
                0.0
            } else {
                let jf = j as f64;
                2.0 / (1.0 - jf * jf)
            }
        })
        .collect()
}

/// Integral over `[-1, 1]` of the interpolant of Gauss-Lobatto samples.
pub fn cc_integrate(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(SpectralError::InvalidArgument("no values to integrate".into()));
    }
    if values.len() == 1 {
        return Ok(2.0 * values[0]);
    }
    let c = ChebTransform::new(values.len(), GridKind::GaussLobatto)?.vals_to_coeffs(values);
    let row = integral_functional_row(c.len());
    Ok(c.iter().zip(&row).map(|(a, b)| a * b).sum())
}

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `n`-point Gauss-Legendre rule by Newton iteration on the three-term
/// recurrence.
pub fn gauss_legendre(n: usize) -> Result<GaussLegendre> {
    if n == 0 {
        return Err(SpectralError::InvalidArgument(
            "Gauss-Legendre rule needs at least one node".into(),
        ));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_and_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(GaussLegendre { nodes, weights })
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::cheb_points;

    #[test]
    fn small_weights() {
        assert_eq!(cc_weights(1).unwrap(), vec![1.0, 1.0]);
        let w = cc_weights(2).unwrap();
        for (a, b) in w.iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(cc_weights(0).is_err());
    }

    #[test]
    fn weights_are_exact_on_monomials() {
        for n in 1..=64usize {
            let w = cc_weights(n).unwrap();
            let g = cheb_points(n, GridKind::GaussLobatto).unwrap();
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e2 * f64::EPSILON);
            for d in 0..=n {
                let q: f64 = w.iter().zip(g.points()).map(|(wi, x)| wi * x.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((q - exact).abs() <= 1e2 * f64::EPSILON, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn integral_row() {
        let r = integral_functional_row(3);
        assert_eq!(r[0], 2.0);
        assert_eq!(r[1], 0.0);
        assert!((r[2] + 2.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn gauss_legendre_is_exact() {
        for n in [1usize, 2, 5, 20, 64] {
            let gl = gauss_legendre(n).unwrap();
            for d in 0..2 * n {
                let q: f64 = gl
                    .nodes
                    .iter()
                    .zip(&gl.weights)
                    .map(|(x, w)| w * x.powi(d as i32))
                    .sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} d={d}");
            }
        }
    }
}
