use std::f64::consts::PI;

use faer::Mat;

use super::barycentric::{bary_weights, eval_row, grid_diff_matrix, grid_rect_diff_matrix};
use crate::cheb::{
    cc_weights, cheb_points, derivative_coeffs, monomial_coeffs, ChebTransform, Grid, GridKind,
};
use crate::error::{Result, SpectralError};
use crate::operators::{integration_power, AlmostBandedMatrix};
use crate::problem::{ConstraintFunctional, ConstraintGram, ConstraintSet};

/// Collocation grids: `x` = Gauss-Lobatto with `N + 1` points, `y` = Gauss
/// with `M + 1` points, `N = M + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPair {
    x: Grid,
    y: Grid,
    m: usize,
}

impl PointPair {
    /// Grids for order `m` with `M + 1` collocation points.
    pub fn new(big_m: usize, m: usize) -> Result<Self> {
        if m == 0 || big_m == 0 {
            return Err(SpectralError::InvalidArgument(
                "collocation needs order m >= 1 and M >= 1".into(),
            ));
        }
        Ok(Self {
            x: cheb_points(big_m + m, GridKind::GaussLobatto)?,
            y: cheb_points(big_m, GridKind::Gauss)?,
            m,
        })
    }

    pub fn x(&self) -> &Grid {
        &self.x
    }

    pub fn y(&self) -> &Grid {
        &self.y
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// `M`.
    pub fn big_m(&self) -> usize {
        self.y.len() - 1
    }

    /// `N = M + m`.
    pub fn big_n(&self) -> usize {
        self.x.len() - 1
    }
}

/// Maps Chebyshev coefficients `c` of `v` (length `M + 1`) to the
/// coefficients (length `N + 1`) of the unique `p` with `p^(m) = v` and
/// `B p = b`: `p = Q^m c + X (BX)^{-1} (b - B Q^m c)`.
#[derive(Debug, Clone)]
pub(crate) struct BirkhoffLift {
    len: usize,
    qm: AlmostBandedMatrix,
    rows: Vec<Vec<f64>>,
    gram: ConstraintGram,
}

impl BirkhoffLift {
    pub(crate) fn new(constraints: &ConstraintSet, big_m: usize) -> Result<Self> {
        let m = constraints.len();
        let len = big_m + 1 + m;
        Ok(Self {
            len,
            qm: integration_power(m, len, big_m + 1)?.matrix,
            rows: constraints.rows(len),
            gram: constraints.monomial_gram()?,
        })
    }

    pub(crate) fn lift(&self, c: &[f64], b: &[f64]) -> Vec<f64> {
        let mut p = self.qm.matvec(c);
        let resid: Vec<f64> = self
            .rows
            .iter()
            .zip(b)
            .map(|(row, bi)| bi - row.iter().zip(&p).map(|(r, x)| r * x).sum::<f64>())
            .collect();
        self.add_polynomial(&mut p, &resid);
        p
    }

    /// Coefficients of `X (BX)^{-1} b`.
    pub(crate) fn constraint_polynomial(&self, b: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.len];
        self.add_polynomial(&mut p, b);
        p
    }

    fn add_polynomial(&self, p: &mut [f64], b: &[f64]) {
        let alpha = self.gram.solve(b);
        for (j, a) in alpha.iter().enumerate() {
            for (pi, c) in p.iter_mut().zip(monomial_coeffs(j, j + 1)) {
                *pi += a * c;
            }
        }
    }
}

/// Chebyshev coefficients of the Lagrange basis `ℓ_j` on the `M + 1` Gauss
/// points (column `j`): `c_k = (2 / (M + 1)) T_k(y_j)`, halved for `k = 0`.
pub fn gauss_lagrange_coeffs(big_m: usize) -> Mat<f64> {
    let k1 = big_m + 1;
    let period = 4 * k1;
    Mat::from_fn(k1, k1, |k, j| {
        // y_j = -cos(phi_j), phi_j = (2j + 1) pi / (2 (M + 1)), so
        // T_k(y_j) = (-1)^k cos(k phi_j)
        let r = (k * (2 * j + 1)) % period;
        let c = (PI * r as f64 / (2 * k1) as f64).cos();
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        let scale = if k == 0 { 1.0 } else { 2.0 };
        scale * s * c / k1 as f64
    })
}

/// Birkhoff pseudospectral integration matrices for one grid pair and
/// constraint set.
#[derive(Debug, Clone)]
pub struct PsimBundle {
    pub pair: PointPair,
    /// `(N + 1) x (N + 1)`; column `j` holds the Chebyshev coefficients of
    /// `B_{j,y}`.
    pub coeffs: Mat<f64>,
    /// `[B_{j,y}(x_i)]`, `(N + 1) x (N + 1)`.
    pub b_full: Mat<f64>,
    /// `[B^(k)_{j,y}(y_i)]` for `j <= M`, `k = 0..m-1`.
    pub btilde: Vec<Mat<f64>>,
    /// `[B^(k)_{M+j,y}(y_i)]` for `j = 1..m`, `k = 0..m-1`.
    pub bhat: Vec<Mat<f64>>,
}

impl PsimBundle {
    /// `[B^(k)_{j,y}(x_i)]` for all `j`, computed from the coefficients.
    pub fn derivative_at_x(&self, k: usize) -> Result<Mat<f64>> {
        let n1 = self.pair.big_n() + 1;
        let t = ChebTransform::new(n1, GridKind::GaussLobatto)?;
        let mut out = Mat::<f64>::zeros(n1, n1);
        for j in 0..n1 {
            let mut c: Vec<f64> = (0..n1).map(|i| self.coeffs[(i, j)]).collect();
            for _ in 0..k {
                c = derivative_coeffs(&c);
            }
            for (i, v) in t.coeffs_to_vals(&c).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

/// Builds the Birkhoff basis `B_{j,y}`, `j = 0..N`, through Chebyshev
/// coefficients: each `ℓ_{j,y}` is integrated `m` times with `Q^m` and
/// corrected by the monomial combination that satisfies the homogeneous
/// constraints; `B_{M+j,y}` solves the constraint system with `b = e_j`.
pub fn birkhoff_psim(pair: &PointPair, constraints: &ConstraintSet) -> Result<PsimBundle> {
    let m = pair.order();
    if constraints.len() != m {
        return Err(SpectralError::InvalidArgument(format!(
            "order {m} needs {m} constraints, got {}",
            constraints.len()
        )));
    }
    let big_m = pair.big_m();
    let n1 = pair.big_n() + 1;
    let lift = BirkhoffLift::new(constraints, big_m)?;
    let ell = gauss_lagrange_coeffs(big_m);
    let zero_b = vec![0.0; m];
    let mut coeffs = Mat::<f64>::zeros(n1, n1);
    for j in 0..=big_m {
        let c: Vec<f64> = (0..=big_m).map(|i| ell[(i, j)]).collect();
        for (i, v) in lift.lift(&c, &zero_b).into_iter().enumerate() {
            coeffs[(i, j)] = v;
        }
    }
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        for (r, v) in lift.constraint_polynomial(&e).into_iter().enumerate() {
            coeffs[(r, big_m + 1 + i)] = v;
        }
    }
    let tx = ChebTransform::new(n1, GridKind::GaussLobatto)?;
    let ty = ChebTransform::new(big_m + 1, GridKind::Gauss)?;
    let mut b_full = Mat::<f64>::zeros(n1, n1);
    let mut btilde = vec![Mat::<f64>::zeros(big_m + 1, big_m + 1); m];
    let mut bhat = vec![Mat::<f64>::zeros(big_m + 1, m); m];
    for j in 0..n1 {
        let mut c: Vec<f64> = (0..n1).map(|i| coeffs[(i, j)]).collect();
        for (i, v) in tx.coeffs_to_vals(&c).into_iter().enumerate() {
            b_full[(i, j)] = v;
        }
        for k in 0..m {
            if k > 0 {
                c = derivative_coeffs(&c);
            }
            let vals = ty.coeffs_to_vals(&c);
            for (i, v) in vals.into_iter().enumerate() {
                if j <= big_m {
                    btilde[k][(i, j)] = v;
                } else {
                    bhat[k][(i, j - big_m - 1)] = v;
                }
            }
        }
    }
    Ok(PsimBundle {
        pair: pair.clone(),
        coeffs,
        b_full,
        btilde,
        bhat,
    })
}

/// `L_B`: `m x (N + 1)` matrix with `B p = L_B p(x)` for every `p` of degree
/// at most `N`. Point values use barycentric rows (unit rows at grid
/// points), derivatives use rows of `D^(q)_{x -> x}`, integrals use
/// Clenshaw-Curtis weights.
pub fn constraint_disc(constraints: &ConstraintSet, x: &Grid) -> Result<Mat<f64>> {
    let pts = x.points();
    let w = bary_weights(pts)?;
    let n1 = pts.len();
    let mut out = Mat::<f64>::zeros(constraints.len(), n1);
    let mut diffs: Vec<Option<Mat<f64>>> = Vec::new();
    for (i, f) in constraints.iter().enumerate() {
        let row = disc_row(f, x, &w, &mut diffs)?;
        for (j, v) in row.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

fn disc_row(
    f: &ConstraintFunctional,
    x: &Grid,
    w: &[f64],
    diffs: &mut Vec<Option<Mat<f64>>>,
) -> Result<Vec<f64>> {
    let pts = x.points();
    let n1 = pts.len();
    Ok(match f {
        ConstraintFunctional::Point { x: x0 } => eval_row(pts, w, *x0),
        ConstraintFunctional::Derivative { order, x: x0 } => {
            if diffs.len() <= *order {
                diffs.resize(order + 1, None);
            }
            if diffs[*order].is_none() {
                diffs[*order] = Some(grid_diff_matrix(x, *order)?);
            }
            let d = diffs[*order].as_ref().expect("filled above");
            let e = eval_row(pts, w, *x0);
            (0..n1)
                .map(|j| (0..n1).map(|l| e[l] * d[(l, j)]).sum())
                .collect()
        }
        ConstraintFunctional::Integral => {
            if x.kind() != GridKind::GaussLobatto {
                return Err(SpectralError::InvalidGrid(
                    "integral constraints are discretized on Gauss-Lobatto grids".into(),
                ));
            }
            cc_weights(n1 - 1)?
        }
        ConstraintFunctional::Combination(terms) => {
            let mut acc = vec![0.0; n1];
            for (c, g) in terms {
                for (a, v) in acc.iter_mut().zip(disc_row(g, x, w, diffs)?) {
                    *a += c * v;
                }
            }
            acc
        }
    })
}

fn inf_norm_minus_identity(a: &Mat<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| {
            (0..a.ncols())
                .map(|j| (a[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

fn stack(top: &Mat<f64>, bottom: &Mat<f64>) -> Mat<f64> {
    let r = top.nrows();
    Mat::from_fn(r + bottom.nrows(), top.ncols(), |i, j| {
        if i < r {
            top[(i, j)]
        } else {
            bottom[(i - r, j)]
        }
    })
}

/// `‖[D^(m)_{x -> y}; L_B] B^(-m)_{y -> x} - I‖_∞` with every factor formed
/// as a matrix in the values basis.
pub fn theorem_identity_check(pair: &PointPair, constraints: &ConstraintSet) -> Result<f64> {
    let bundle = birkhoff_psim(pair, constraints)?;
    let d = grid_rect_diff_matrix(pair.x(), pair.y(), pair.order())?;
    let lb = constraint_disc(constraints, pair.x())?;
    let prod = stack(&(&d * &bundle.b_full), &(&lb * &bundle.b_full));
    Ok(inf_norm_minus_identity(&prod))
}

/// The same identity evaluated on the Birkhoff basis polynomials directly:
/// `B^(m)_{j,y}(y_i)` by exact coefficient differentiation and `B B_{j,y}`
/// by the coefficient-space constraint rows. Avoids forming `D^(m)`, whose
/// norm grows like `N^{2m}`.
pub fn theorem_identity_check_spectral(bundle: &PsimBundle, constraints: &ConstraintSet) -> Result<f64> {
    let pair = &bundle.pair;
    let m = pair.order();
    let n1 = pair.big_n() + 1;
    let my = pair.big_m() + 1;
    let ty = ChebTransform::new(my, GridKind::Gauss)?;
    let rows = constraints.rows(n1);
    let mut prod = Mat::<f64>::zeros(n1, n1);
    for j in 0..n1 {
        let c: Vec<f64> = (0..n1).map(|i| bundle.coeffs[(i, j)]).collect();
        let mut dm = c.clone();
        for _ in 0..m {
            dm = derivative_coeffs(&dm);
        }
        for (i, v) in ty.coeffs_to_vals(&dm).into_iter().enumerate() {
            prod[(i, j)] = v;
        }
        for (r, row) in rows.iter().enumerate() {
            prod[(my + r, j)] = row.iter().zip(&c).map(|(a, b)| a * b).sum();
        }
    }
    Ok(inf_norm_minus_identity(&prod))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::barycentric::{diff_matrix, resampling_matrix};
    use crate::operators::integration_op_rect;

    fn dirichlet(a: f64, b: f64) -> ConstraintFunctional {
        ConstraintFunctional::combination(vec![
            (a, ConstraintFunctional::point(-1.0)),
            (b, ConstraintFunctional::point(1.0)),
        ])
    }

    fn eval_coeffs(c: &[f64], x: f64) -> f64 {
        crate::cheb::ChebSeries::chebyshev(c.to_vec()).unwrap().eval(x).unwrap()
    }

    #[test]
    fn lagrange_coefficients_interpolate() {
        let big_m = 7;
        let ell = gauss_lagrange_coeffs(big_m);
        let y = cheb_points(big_m, GridKind::Gauss).unwrap();
        for j in 0..=big_m {
            let c: Vec<f64> = (0..=big_m).map(|i| ell[(i, j)]).collect();
            for (i, &t) in y.points().iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((eval_coeffs(&c, t) - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn first_order_closed_form() {
        let (a, b) = (2.0, 0.5);
        let cons = ConstraintSet::new(vec![dirichlet(a, b)]);
        let pair = PointPair::new(12, 1).unwrap();
        let bundle = birkhoff_psim(&pair, &cons).unwrap();
        let ell = gauss_lagrange_coeffs(12);
        let q = integration_op_rect(14, 13).unwrap();
        let x = pair.x().points();
        for j in 0..=12 {
            let c: Vec<f64> = (0..13).map(|i| ell[(i, j)]).collect();
            let int_l = q.apply(&c);
            let total = eval_coeffs(&int_l, 1.0);
            for (i, &t) in x.iter().enumerate() {
                let e = eval_coeffs(&int_l, t) - b / (a + b) * total;
                assert!((bundle.b_full[(i, j)] - e).abs() < 1e3 * f64::EPSILON);
            }
        }
        for i in 0..x.len() {
            assert!((bundle.b_full[(i, 13)] - 1.0 / (a + b)).abs() < 1e3 * f64::EPSILON);
        }
    }

    #[test]
    fn first_order_integral_closed_form() {
        let cons = ConstraintSet::new(vec![ConstraintFunctional::integral()]);
        let pair = PointPair::new(10, 1).unwrap();
        let bundle = birkhoff_psim(&pair, &cons).unwrap();
        let ell = gauss_lagrange_coeffs(10);
        let q = integration_op_rect(12, 11).unwrap();
        let w = crate::cheb::integral_functional_row(12);
        for j in 0..=10 {
            let c: Vec<f64> = (0..11).map(|i| ell[(i, j)]).collect();
            let int_l = q.apply(&c);
            let mean = 0.5 * int_l.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            for (i, &t) in pair.x().points().iter().enumerate() {
                let e = eval_coeffs(&int_l, t) - mean;
                assert!((bundle.b_full[(i, j)] - e).abs() < 1e3 * f64::EPSILON);
            }
        }
        for i in 0..=11 {
            assert!((bundle.b_full[(i, 11)] - 0.5).abs() < 1e3 * f64::EPSILON);
        }
    }

    #[test]
    fn second_order_closed_form() {
        let (a, b) = (1.0, 3.0);
        let cons = ConstraintSet::new(vec![dirichlet(a, b), ConstraintFunctional::integral()]);
        let big_m = 9;
        let pair = PointPair::new(big_m, 2).unwrap();
        let bundle = birkhoff_psim(&pair, &cons).unwrap();
        let ell = gauss_lagrange_coeffs(big_m);
        let q1 = integration_op_rect(big_m + 2, big_m + 1).unwrap();
        let q2 = integration_op_rect(big_m + 3, big_m + 2).unwrap();
        let w = crate::cheb::integral_functional_row(big_m + 3);
        let integral = |c: &[f64]| c.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let d1 = bundle.derivative_at_x(1).unwrap();
        let tol = 1e3 * f64::EPSILON;
        for j in 0..=big_m {
            let c: Vec<f64> = (0..=big_m).map(|i| ell[(i, j)]).collect();
            let i1 = q1.apply(&c);
            let i2 = q2.apply(&i1);
            let (s1, s2) = (integral(&i1), integral(&i2));
            for (i, &t) in pair.x().points().iter().enumerate() {
                let e = eval_coeffs(&i2, t) - b * t / (b - a) * s1
                    + ((a + b) * t / (2.0 * (b - a)) - 0.5) * s2;
                assert!((bundle.b_full[(i, j)] - e).abs() < tol);
                let de = eval_coeffs(&i1, t) - b / (b - a) * s1 + (a + b) / (2.0 * (b - a)) * s2;
                assert!((d1[(i, j)] - de).abs() < tol);
            }
        }
        for (i, &t) in pair.x().points().iter().enumerate() {
            assert!((bundle.b_full[(i, big_m + 1)] - t / (b - a)).abs() < tol);
            assert!((d1[(i, big_m + 1)] - 1.0 / (b - a)).abs() < tol);
            let e2 = 0.5 - (a + b) * t / (2.0 * (b - a));
            assert!((bundle.b_full[(i, big_m + 2)] - e2).abs() < tol);
        }
    }

    #[test]
    fn discretized_constraints() {
        let x = cheb_points(6, GridKind::GaussLobatto).unwrap();
        let lb = constraint_disc(&ConstraintSet::new(vec![ConstraintFunctional::point(-1.0)]), &x).unwrap();
        assert_eq!((0..7).map(|j| lb[(0, j)]).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let cons = ConstraintSet::new(vec![dirichlet(2.0, 5.0), ConstraintFunctional::integral()]);
        let lb = constraint_disc(&cons, &x).unwrap();
        let w = cc_weights(6).unwrap();
        for j in 0..7 {
            let e0 = if j == 0 { 2.0 } else if j == 6 { 5.0 } else { 0.0 };
            assert_eq!(lb[(0, j)], e0);
            assert_eq!(lb[(1, j)], w[j]);
        }
        // exact on polynomials of degree N, including off-grid derivatives
        let cons = ConstraintSet::new(vec![
            ConstraintFunctional::derivative(2, 0.3),
            ConstraintFunctional::point(0.1),
        ]);
        let lb = constraint_disc(&cons, &x).unwrap();
        let p = |t: f64| t.powi(6) - 2.0 * t.powi(3) + t;
        let v: Vec<f64> = x.points().iter().map(|&t| p(t)).collect();
        let d2: f64 = (0..7).map(|j| lb[(0, j)] * v[j]).sum();
        let e = 30.0 * 0.3f64.powi(4) - 12.0 * 0.3;
        assert!((d2 - e).abs() < 1e-12);
        let pv: f64 = (0..7).map(|j| lb[(1, j)] * v[j]).sum();
        assert!((pv - p(0.1)).abs() < 1e-14);
    }

    #[test]
    fn theorem_identity_low_order() {
        let pair = PointPair::new(15, 1).unwrap();
        let cons = ConstraintSet::new(vec![ConstraintFunctional::point(-1.0)]);
        assert!(theorem_identity_check(&pair, &cons).unwrap() <= 1e-11);
        let cons = ConstraintSet::new(vec![dirichlet(1.0, 3.0), ConstraintFunctional::integral()]);
        let pair = PointPair::new(14, 2).unwrap();
        assert!(theorem_identity_check(&pair, &cons).unwrap() <= 1e-10);
        // the values-basis product loses about ‖D^(2)‖ eps; the
        // coefficient-space evaluation keeps the identity at larger N
        let pair = PointPair::new(30, 2).unwrap();
        let bundle = birkhoff_psim(&pair, &cons).unwrap();
        assert!(theorem_identity_check_spectral(&bundle, &cons).unwrap() <= 1e-12);
    }

    #[test]
    fn proof_identities() {
        let pair = PointPair::new(20, 2).unwrap();
        let cons = ConstraintSet::new(vec![
            ConstraintFunctional::point(-1.0),
            ConstraintFunctional::neumann(1.0),
        ]);
        let bundle = birkhoff_psim(&pair, &cons).unwrap();
        let x = pair.x().points();
        let d2 = diff_matrix(x, 2).unwrap();
        let lhs = &d2 * &bundle.b_full;
        let pyx = resampling_matrix(pair.y().points(), x).unwrap();
        let scale = 1e4 * f64::EPSILON * 23f64.powi(4);
        for i in 0..23 {
            for j in 0..23 {
                let e = if j <= 20 { pyx[(i, j)] } else { 0.0 };
                assert!((lhs[(i, j)] - e).abs() < scale, "{i} {j}");
            }
        }
        let lb = constraint_disc(&cons, pair.x()).unwrap();
        let lbb = &lb * &bundle.b_full;
        for i in 0..2 {
            for j in 0..23 {
                let e = if j == 21 + i { 1.0 } else { 0.0 };
                assert!((lbb[(i, j)] - e).abs() < 1e4 * f64::EPSILON * 23.0 * 23.0);
            }
        }
        // B^(k-m) = D^(k) B^(-m) for k = 1
        let d1 = diff_matrix(x, 1).unwrap();
        let lhs = &d1 * &bundle.b_full;
        let b1 = bundle.derivative_at_x(1).unwrap();
        for i in 0..23 {
            for j in 0..23 {
                assert!((lhs[(i, j)] - b1[(i, j)]).abs() < 1e4 * f64::EPSILON * 23.0 * 23.0);
            }
        }
    }
}
