use std::f64::consts::PI;

use faer::Mat;

use crate::cheb::{Grid, GridKind};
use crate::error::{Result, SpectralError};

/// A point set, optionally with angles `θ_j` such that `x_j = sin θ_j`;
/// differences are then formed as `2 cos((θ_i + θ_j) / 2) sin((θ_i - θ_j) / 2)`,
/// which keeps full relative accuracy for clustered Chebyshev points.
#[derive(Debug, Clone)]
pub(crate) struct Nodes<'a> {
    points: &'a [f64],
    angles: Option<Vec<f64>>,
}

impl<'a> Nodes<'a> {
    pub(crate) fn plain(points: &'a [f64]) -> Self {
        Self { points, angles: None }
    }

    pub(crate) fn grid(grid: &'a Grid) -> Self {
        let n = grid.degree() as f64;
        let angles = (0..grid.len())
            .map(|j| {
                let j = j as f64;
                match grid.kind() {
                    GridKind::GaussLobatto => PI * (2.0 * j - n) / (2.0 * n),
                    GridKind::Gauss => PI * (2.0 * j - n) / (2.0 * n + 2.0),
                }
            })
            .collect();
        Self {
            points: grid.points(),
            angles: Some(angles),
        }
    }

    fn len(&self) -> usize {
        self.points.len()
    }

    /// `self_i - other_j`.
    fn diff(&self, i: usize, other: &Nodes<'_>, j: usize) -> f64 {
        match (&self.angles, &other.angles) {
            (Some(a), Some(b)) => {
                if self.points[i] == other.points[j] {
                    0.0
                } else {
                    2.0 * (0.5 * (a[i] + b[j])).cos() * (0.5 * (a[i] - b[j])).sin()
                }
            }
            _ => self.points[i] - other.points[j],
        }
    }
}

fn check_distinct(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(SpectralError::InvalidGrid("empty point set".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(SpectralError::InvalidGrid(format!("duplicate point {}", w[0])));
    }
    if sorted.iter().any(|x| !x.is_finite()) {
        return Err(SpectralError::InvalidGrid("non-finite point".into()));
    }
    Ok(())
}

/// Barycentric weights `w_j = Π_{n≠j} (x_j - x_n)^{-1}`.
///
/// The plain product is returned when it is representable; otherwise the
/// weights are rescaled by a common factor (which cancels in every
/// barycentric formula) using log magnitudes.
pub fn bary_weights(points: &[f64]) -> Result<Vec<f64>> {
    weights(&Nodes::plain(points))
}

pub(crate) fn weights(nodes: &Nodes<'_>) -> Result<Vec<f64>> {
    check_distinct(nodes.points)?;
    let n = nodes.len();
    let direct: Vec<f64> = (0..n)
        .map(|j| {
            let mut p = 1.0;
            for i in 0..n {
                if i != j {
                    p *= nodes.diff(j, nodes, i);
                }
            }
            1.0 / p
        })
        .collect();
    if direct.iter().all(|w| w.is_finite() && w.abs() >= f64::MIN_POSITIVE) {
        return Ok(direct);
    }
    let mut logs = vec![0.0; n];
    let mut signs = vec![1.0; n];
    for j in 0..n {
        for i in 0..n {
            if i != j {
                let d = nodes.diff(j, nodes, i);
                logs[j] -= d.abs().ln();
                if d < 0.0 {
                    signs[j] = -signs[j];
                }
            }
        }
    }
    let lmax = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(logs
        .iter()
        .zip(&signs)
        .map(|(l, s)| s * (l - lmax).exp())
        .collect())
}

/// Row of barycentric interpolation weights evaluating the interpolant on
/// `from` at `x`.
pub fn eval_row(from: &[f64], weights: &[f64], x: f64) -> Vec<f64> {
    let mut row = vec![0.0; from.len()];
    if let Some(j) = from.iter().position(|&p| p == x) {
        row[j] = 1.0;
        return row;
    }
    let mut s = 0.0;
    for (j, (&p, &w)) in from.iter().zip(weights).enumerate() {
        row[j] = w / (x - p);
        s += row[j];
    }
    for r in &mut row {
        *r /= s;
    }
    row
}

/// `P^{from -> to}`: `to.len() x from.len()` interpolation matrix.
pub fn resampling_matrix(from: &[f64], to: &[f64]) -> Result<Mat<f64>> {
    resample(&Nodes::plain(from), &Nodes::plain(to))
}

pub(crate) fn resample(from: &Nodes<'_>, to: &Nodes<'_>) -> Result<Mat<f64>> {
    let w = weights(from)?;
    let mut p = Mat::<f64>::zeros(to.len(), from.len());
    for i in 0..to.len() {
        if let Some(j) = from.points.iter().position(|&q| q == to.points[i]) {
            p[(i, j)] = 1.0;
            continue;
        }
        let mut s = 0.0;
        for j in 0..from.len() {
            let v = w[j] / to.diff(i, from, j);
            p[(i, j)] = v;
            s += v;
        }
        for j in 0..from.len() {
            p[(i, j)] /= s;
        }
    }
    Ok(p)
}

/// `D^(k)_{x -> x}` with `D^(1)_{ij} = (w_j / w_i) / (x_i - x_j)` off the
/// diagonal, negative row sums on it, and `D^(k) = (D^(1))^k`.
pub fn diff_matrix(points: &[f64], k: usize) -> Result<Mat<f64>> {
    differentiation(&Nodes::plain(points), k)
}

pub(crate) fn differentiation(nodes: &Nodes<'_>, k: usize) -> Result<Mat<f64>> {
    let n = nodes.len();
    if k == 0 {
        check_distinct(nodes.points)?;
        return Ok(Mat::identity(n, n));
    }
    let w = weights(nodes)?;
    let mut d = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / nodes.diff(i, nodes, j);
                d[(i, j)] = v;
                s += v;
            }
        }
        d[(i, i)] = -s;
    }
    let mut acc = d.clone();
    for _ in 1..k {
        acc = &d * &acc;
    }
    Ok(acc)
}

/// `D^(k)_{from -> to} = P^{from -> to} D^(k)_{from -> from}`; `k = 0` gives
/// the resampling matrix.
pub fn rect_diff_matrix(from: &[f64], to: &[f64], k: usize) -> Result<Mat<f64>> {
    rect_diff(&Nodes::plain(from), &Nodes::plain(to), k)
}

pub(crate) fn rect_diff(from: &Nodes<'_>, to: &Nodes<'_>, k: usize) -> Result<Mat<f64>> {
    let p = resample(from, to)?;
    if k == 0 {
        return Ok(p);
    }
    Ok(&p * &differentiation(from, k)?)
}

/// [`resampling_matrix`] between Chebyshev grids, with point differences
/// formed from the grid angles.
pub fn grid_resampling_matrix(from: &Grid, to: &Grid) -> Result<Mat<f64>> {
    resample(&Nodes::grid(from), &Nodes::grid(to))
}

/// [`diff_matrix`] on a Chebyshev grid, with point differences formed from
/// the grid angles.
pub fn grid_diff_matrix(grid: &Grid, k: usize) -> Result<Mat<f64>> {
    differentiation(&Nodes::grid(grid), k)
}

/// [`rect_diff_matrix`] between Chebyshev grids, with point differences
/// formed from the grid angles.
pub fn grid_rect_diff_matrix(from: &Grid, to: &Grid, k: usize) -> Result<Mat<f64>> {
    rect_diff(&Nodes::grid(from), &Nodes::grid(to), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::{cheb_points, GridKind};
    use proptest::prelude::*;

    #[test]
    fn small_weights() {
        assert_eq!(bary_weights(&[-1.0, 1.0]).unwrap(), vec![-0.5, 0.5]);
        assert_eq!(bary_weights(&[-1.0, 0.0, 1.0]).unwrap(), vec![0.5, -1.0, 0.5]);
        assert!(matches!(
            bary_weights(&[0.0, 0.5, 0.0]),
            Err(SpectralError::InvalidGrid(_))
        ));
    }

    #[test]
    fn large_grids_are_rescaled() {
        let x = cheb_points(2000, GridKind::Gauss).unwrap();
        let w = bary_weights(x.points()).unwrap();
        assert!(w.iter().all(|v| v.is_finite() && *v != 0.0));
        // Chebyshev-root weights are proportional to (-1)^j sin(phi_j)
        let n = x.len();
        let ratio = |j: usize| {
            let phi = std::f64::consts::PI * (2 * j + 1) as f64 / (2 * n) as f64;
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            w[j] / (s * phi.sin())
        };
        let r0 = ratio(0);
        for j in 0..n {
            assert!((ratio(j) - r0).abs() < 1e-10 * r0.abs(), "{j}");
        }
    }

    #[test]
    fn scaling_invariance() {
        let x = cheb_points(6, GridKind::GaussLobatto).unwrap();
        let y = cheb_points(3, GridKind::Gauss).unwrap();
        let w = bary_weights(x.points()).unwrap();
        let w7: Vec<f64> = w.iter().map(|v| 7.0 * v).collect();
        for &t in y.points() {
            let a = eval_row(x.points(), &w, t);
            let b = eval_row(x.points(), &w7, t);
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 4.0 * f64::EPSILON);
            }
        }
    }

    #[test]
    fn identity_and_reproduction() {
        let x = cheb_points(4, GridKind::GaussLobatto).unwrap();
        let p = resampling_matrix(x.points(), x.points()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(p[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
        let y = cheb_points(2, GridKind::Gauss).unwrap();
        let p = resampling_matrix(x.points(), y.points()).unwrap();
        for (i, &t) in y.points().iter().enumerate() {
            let v: f64 = (0..5).map(|j| p[(i, j)] * x.points()[j].powi(2)).sum();
            assert!((v - t * t).abs() <= 1e2 * f64::EPSILON);
        }
    }

    #[test]
    fn differentiation() {
        let x = [-1.0, 0.0, 1.0];
        let d = diff_matrix(&x, 1).unwrap();
        let u = [1.0, 0.0, 1.0];
        let du: Vec<f64> = (0..3).map(|i| (0..3).map(|j| d[(i, j)] * u[j]).sum()).collect();
        assert_eq!(du, vec![-2.0, 0.0, 2.0]);
        let g = cheb_points(8, GridKind::GaussLobatto).unwrap();
        let d1 = diff_matrix(g.points(), 1).unwrap();
        let d2 = diff_matrix(g.points(), 2).unwrap();
        let sq = &d1 * &d1;
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(d2[(i, j)], sq[(i, j)]);
            }
        }
        let y = cheb_points(5, GridKind::Gauss).unwrap();
        let r0 = rect_diff_matrix(g.points(), y.points(), 0).unwrap();
        let p = resampling_matrix(g.points(), y.points()).unwrap();
        assert_eq!(r0, p);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn resample_roundtrip(m in 1usize..200, extra in 0usize..60) {
            let n = m + extra;
            let x = cheb_points(n, GridKind::GaussLobatto).unwrap();
            let y = cheb_points(m, GridKind::Gauss).unwrap();
            let pxy = resampling_matrix(x.points(), y.points()).unwrap();
            let pyx = resampling_matrix(y.points(), x.points()).unwrap();
            let prod = &pxy * &pyx;
            for i in 0..=m {
                let s: f64 = (0..=n).map(|j| pxy[(i, j)]).sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
                for j in 0..=m {
                    let e = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((prod[(i, j)] - e).abs() < 1e-10);
                }
            }
        }
    }
}
