//! Ultraspherical spectral method (US) and its diagonal right
//! preconditioning (P-US).
//!
//! The operator
//!
//! ```text
//! L = D_m + Σ_{k=1}^{m-1} S_{m-1}..S_k M_k[a^k] D_k + S_{m-1}..S_0 M_0[a^0]
//! ```
//!
//! maps Chebyshev-T coefficients of `u` to `C^(m)` coefficients of the
//! left-hand side. The square system stacks the `m` constraint rows on top
//! of the first `n - m` rows of `L`. Its condition number grows linearly in
//! `n`; right preconditioning by
//! `R = diag(I_m, 1/m, 1/(m+1), ..) / (2^{m-1} (m-1)!)` removes the growth.

use crate::cheb::ChebSeries;
use crate::error::{Result, SpectralError};
use crate::integral::Resolution;
use crate::operators::{
    conv_chain, diff_op_rect, diff_scale, mult_op_cheb_rect, mult_op_ultra_rect,
    AlmostBandedMatrix, LinearOperator, MultiplicationOperator, OperatorTruncation,
};
use crate::problem::OdeProblem;
use crate::solvers::{
    adaptive_solve, almost_banded_qr_solve, bicgstab_solve, cond2_estimate, dense_lu_solve,
    dense_qr_solve, residual_inf, AdaptiveOptions, Backend, SolveDiagnostics,
};

/// Square US system `A_n u = rhs`.
#[derive(Debug, Clone)]
pub struct UsSystem {
    /// First `n - m` rows of `L` (`C^(m)` output).
    pub l_n: OperatorTruncation,
    /// Constraint rows of length `n`.
    pub b_rows: Vec<Vec<f64>>,
    /// `[B; P_{n-m} L] P_nᵀ`.
    pub a_n: AlmostBandedMatrix,
    /// Diagonal of `R_n`.
    pub r_n: Vec<f64>,
    pub rhs: Vec<f64>,
    pub m: usize,
}

impl UsSystem {
    pub fn n(&self) -> usize {
        self.a_n.nrows()
    }
}

/// Diagonal of the `n x n` section of `R`.
pub fn preconditioner_diagonal(m: usize, n: usize) -> Vec<f64> {
    let scale = 1.0 / diff_scale(m);
    (0..n)
        .map(|j| if j < m { scale } else { scale / j as f64 })
        .collect()
}

fn check_size(problem: &OdeProblem, n: usize) -> Result<()> {
    let need = 2 * problem.order() + 1;
    if n < need {
        return Err(SpectralError::InvalidTruncation {
            n,
            reason: format!("the ultraspherical system needs n >= {need}"),
        });
    }
    Ok(())
}

/// First `rows` rows of `L` acting on `cols` Chebyshev coefficients.
pub fn us_operator_section(problem: &OdeProblem, rows: usize, cols: usize) -> Result<OperatorTruncation> {
    let m = problem.order();
    let mut acc = diff_op_rect(m, rows, cols)?;
    // S chains are upper triangular with bandwidth 2 per factor, so the
    // intermediate length rows + 2m keeps every product exact.
    let mid = rows + 2 * m;
    for k in 0..m {
        let a = problem.coeff(k);
        if a.is_zero() {
            continue;
        }
        let chain = conv_chain(k, m, rows, mid)?;
        let term = if k == 0 {
            chain.compose(&mult_op_cheb_rect(a, mid, cols)?)?
        } else {
            let mk = mult_op_ultra_rect(a, k, mid, mid)?;
            chain.compose(&mk)?.compose(&diff_op_rect(k, mid, cols)?)?
        };
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// Assembles `A_n = [B P_nᵀ; P_{n-m} L P_nᵀ]` and
/// `rhs = [b; P_{n-m} S_{m-1}..S_0 f]`.
pub fn assemble_us(problem: &OdeProblem, n: usize) -> Result<UsSystem> {
    check_size(problem, n)?;
    problem.constraints().monomial_gram()?;
    let m = problem.order();
    let l_n = us_operator_section(problem, n - m, n)?;
    let b_rows = problem.constraints().rows(n);
    let (mut lower, mut upper) = (0usize, 0usize);
    for i in 0..n - m {
        for (j, _) in l_n.matrix.row_entries(i) {
            let r = i + m;
            if j < r {
                lower = lower.max(r - j);
            } else {
                upper = upper.max(j - r);
            }
        }
    }
    let mut a_n = AlmostBandedMatrix::zeros(n, n, lower, upper, m);
    for (i, row) in b_rows.iter().enumerate() {
        a_n.dense_row_mut(i).copy_from_slice(row);
    }
    for i in 0..n - m {
        for (j, v) in l_n.matrix.row_entries(i) {
            if v != 0.0 {
                a_n.set(i + m, j, v);
            }
        }
    }
    let f = problem.rhs();
    let ff = conv_chain(0, m, n - m, f.len().max(1))?.apply(&f.padded(f.len().max(1)));
    let mut rhs = problem.targets().to_vec();
    rhs.extend(ff);
    Ok(UsSystem {
        l_n,
        b_rows,
        a_n,
        r_n: preconditioner_diagonal(m, n),
        rhs,
        m,
    })
}

/// `A_n R_n`.
pub fn precondition_us(system: &UsSystem) -> AlmostBandedMatrix {
    let mut a = system.a_n.clone();
    a.scale_columns(&system.r_n);
    a
}

/// Matrix-free `A_n` (optionally times `R_n`): `M_k[a^k]` is applied as
/// `S_{k-1}..S_0 M_0[a^k] (S_{k-1}..S_0)^{-1}`, with `M_0` through fast
/// Toeplitz-plus-Hankel products and the inverse conversion by back
/// substitution.
pub struct UsOperator {
    n: usize,
    m: usize,
    b_rows: Vec<Vec<f64>>,
    terms: Vec<(usize, MultiplicationOperator, AlmostBandedMatrix)>,
    /// Diagonal of `R_n` when preconditioned.
    scale: Option<Vec<f64>>,
}

fn inverse_conversion(mut y: Vec<f64>, from: usize, to: usize) -> Vec<f64> {
    // back substitution through S_{to-1}, .., S_from (upper triangular)
    for level in (from..to).rev() {
        let kf = level as f64;
        let n = y.len();
        for j in (0..n).rev() {
            let (diag, sup) = if level == 0 {
                (if j == 0 { 1.0 } else { 0.5 }, -0.5)
            } else {
                let jf = j as f64;
                (kf / (kf + jf), -kf / (kf + jf + 2.0))
            };
            let s = if j + 2 < n { y[j] - sup * y[j + 2] } else { y[j] };
            y[j] = s / diag;
        }
    }
    y
}

impl UsOperator {
    pub fn new(problem: &OdeProblem, n: usize, preconditioned: bool) -> Result<(Self, Vec<f64>)> {
        check_size(problem, n)?;
        problem.constraints().monomial_gram()?;
        let m = problem.order();
        let rows = n - m;
        let mut terms = Vec::new();
        for k in 0..m {
            let a = problem.coeff(k);
            if a.is_zero() {
                continue;
            }
            let len = n - k;
            let mult = MultiplicationOperator::new(a, rows + 2 * m, len)?;
            let chain = conv_chain(0, m, rows, rows + 2 * m)?.matrix;
            terms.push((k, mult, chain));
        }
        let f = problem.rhs();
        let ff = conv_chain(0, m, rows, f.len().max(1))?.apply(&f.padded(f.len().max(1)));
        let mut rhs = problem.targets().to_vec();
        rhs.extend(ff);
        Ok((
            Self {
                n,
                m,
                b_rows: problem.constraints().rows(n),
                terms,
                scale: preconditioned.then(|| preconditioner_diagonal(m, n)),
            },
            rhs,
        ))
    }
}

fn diff_apply(k: usize, x: &[f64]) -> Vec<f64> {
    let s = diff_scale(k);
    (0..x.len().saturating_sub(k))
        .map(|i| s * (i + k) as f64 * x[i + k])
        .collect()
}

impl LinearOperator for UsOperator {
    fn nrows(&self) -> usize {
        self.n
    }
    fn ncols(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let xs: Vec<f64> = match &self.scale {
            Some(r) => x.iter().zip(r).map(|(a, b)| a * b).collect(),
            None => x.to_vec(),
        };
        let m = self.m;
        for (yi, row) in y.iter_mut().zip(&self.b_rows) {
            *yi = row.iter().zip(&xs).map(|(a, b)| a * b).sum();
        }
        let out = &mut y[m..];
        let dm = diff_apply(m, &xs);
        for (o, d) in out.iter_mut().zip(dm.iter().chain(std::iter::repeat(&0.0))) {
            *o = *d;
        }
        for (k, mult, chain) in &self.terms {
            let t = if *k == 0 {
                xs.clone()
            } else {
                inverse_conversion(diff_apply(*k, &xs), 0, *k)
            };
            let p = mult.apply(&t);
            let c = chain.matvec(&p);
            for (o, v) in out.iter_mut().zip(&c) {
                *o += v;
            }
        }
    }
}

/// Plain or diagonally preconditioned US.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UsVariant {
    Plain,
    Preconditioned,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsOptions {
    pub resolution: Resolution,
    pub variant: UsVariant,
    pub backend: Backend,
    pub compute_cond: bool,
    pub iter_tol: f64,
    pub max_iter: Option<usize>,
}

impl UsOptions {
    pub fn fixed(n: usize, variant: UsVariant) -> Self {
        Self {
            resolution: Resolution::Fixed(n),
            variant,
            backend: Backend::Auto,
            compute_cond: false,
            iter_tol: 1e-14,
            max_iter: None,
        }
    }

    pub fn adaptive(variant: UsVariant) -> Self {
        Self {
            resolution: Resolution::Adaptive(AdaptiveOptions::default()),
            ..Self::fixed(0, variant)
        }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_cond(mut self) -> Self {
        self.compute_cond = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct UsSolution {
    pub u: ChebSeries,
    pub diagnostics: SolveDiagnostics,
}

fn solve_us_at(problem: &OdeProblem, n: usize, opts: &UsOptions) -> Result<(Vec<f64>, SolveDiagnostics)> {
    let m = problem.order();
    let d = problem.max_coeff_degree();
    let pre = opts.variant == UsVariant::Preconditioned;
    let backend = match opts.backend {
        Backend::Auto => crate::integral::auto_backend(2 * (d + m) + m, n),
        b => b,
    };
    let r = preconditioner_diagonal(m, n);
    let (z, mut diag, assembled) = match backend {
        Backend::BiCgStab => {
            let (op, rhs) = UsOperator::new(problem, n, pre)?;
            let out = bicgstab_solve(&op, &rhs, opts.iter_tol, opts.max_iter.unwrap_or(10 * n))?;
            (out.x, out.diagnostics, None)
        }
        _ => {
            let sys = assemble_us(problem, n)?;
            let a = if pre { precondition_us(&sys) } else { sys.a_n.clone() };
            let (scaled, rhs) = equilibrate_constraints(&a, &sys.rhs, m);
            let (z, d) = match backend {
                Backend::AlmostBandedQr => almost_banded_qr_solve(&scaled, &rhs)?,
                _ => {
                    let dm = scaled.to_dense();
                    let z = if backend == Backend::DenseLu {
                        dense_lu_solve(dm.as_ref(), &rhs)?
                    } else {
                        dense_qr_solve(dm.as_ref(), &rhs)?
                    };
                    let d = SolveDiagnostics::new(n, backend, residual_inf(dm.as_ref(), &z, &rhs));
                    (z, d)
                }
            };
            (z, d, Some(a))
        }
    };
    if opts.compute_cond {
        let a = match assembled {
            Some(a) => a,
            None => {
                let sys = assemble_us(problem, n)?;
                if pre {
                    precondition_us(&sys)
                } else {
                    sys.a_n
                }
            }
        };
        diag.cond2 = Some(cond2_estimate(a.to_dense().as_ref())?);
    }
    let u = if pre {
        z.iter().zip(&r).map(|(a, b)| a * b).collect()
    } else {
        z
    };
    Ok((u, diag))
}

/// Scales each constraint row (and its target) to unit max norm. High-order
/// derivative constraints have entries growing like `j^{2q}`, which would
/// otherwise dominate the pivot tolerance of the direct solvers.
fn equilibrate_constraints(a: &AlmostBandedMatrix, rhs: &[f64], m: usize) -> (AlmostBandedMatrix, Vec<f64>) {
    let mut a = a.clone();
    let mut rhs = rhs.to_vec();
    for i in 0..m {
        let row = a.dense_row_mut(i);
        let s = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
            rhs[i] /= s;
        }
    }
    (a, rhs)
}

/// Solves with US or P-US at a fixed or adaptively chosen truncation.
pub fn solve_us(problem: &OdeProblem, opts: &UsOptions) -> Result<UsSolution> {
    let (u, mut diag, n) = match opts.resolution {
        Resolution::Fixed(n) => {
            let (u, d) = solve_us_at(problem, n, opts)?;
            (u, d, n)
        }
        Resolution::Adaptive(mut a) => {
            let start = 2 * (problem.max_coeff_degree() + problem.order());
            a.n_start = a.n_start.max(start);
            adaptive_solve(|n| solve_us_at(problem, n, opts), a)?
        }
    };
    diag.n_used = n;
    Ok(UsSolution {
        u: ChebSeries::chebyshev(u)?,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::adaptive_approx;
    use crate::problem::{ConstraintFunctional, ConstraintSet};

    fn problem(coeffs: Vec<ChebSeries>, f: ChebSeries, cons: Vec<ConstraintFunctional>, b: Vec<f64>) -> OdeProblem {
        OdeProblem::new(coeffs, f, ConstraintSet::new(cons), b).unwrap()
    }

    #[test]
    fn pure_derivative_rows() {
        let p = problem(
            vec![ChebSeries::zero()],
            ChebSeries::zero(),
            vec![ConstraintFunctional::point(-1.0)],
            vec![0.0],
        );
        let sys = assemble_us(&p, 6).unwrap();
        let a = sys.a_n.to_dense();
        assert_eq!(&sys.b_rows[0][..], &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
        for i in 1..6 {
            for j in 0..6 {
                let e = if j == i { i as f64 } else { 0.0 };
                assert_eq!(a[(i, j)], e);
            }
        }
    }

    #[test]
    fn preconditioner_first_order() {
        let r = preconditioner_diagonal(1, 5);
        assert_eq!(r, vec![1.0, 1.0, 0.5, 1.0 / 3.0, 0.25]);
        let r = preconditioner_diagonal(2, 4);
        assert_eq!(r, vec![0.5, 0.5, 0.25, 0.5 / 3.0]);
    }

    #[test]
    fn trivial_solve() {
        let p = problem(
            vec![ChebSeries::zero()],
            ChebSeries::zero(),
            vec![ConstraintFunctional::point(-1.0)],
            vec![3.0],
        );
        for v in [UsVariant::Plain, UsVariant::Preconditioned] {
            let s = solve_us(&p, &UsOptions::fixed(8, v)).unwrap();
            assert!((s.u.coeffs()[0] - 3.0).abs() < 1e-15);
            assert!(s.u.coeffs()[1..].iter().all(|c| c.abs() < 1e-15));
        }
    }

    #[test]
    fn second_order_exact() {
        // u'' + x u' + u = f with u = sin(2x)
        let x = ChebSeries::chebyshev(vec![0.0, 1.0]).unwrap();
        let f = adaptive_approx(|t| -4.0 * (2.0 * t).sin() + 2.0 * t * (2.0 * t).cos() + (2.0 * t).sin(), 1e-15)
            .unwrap();
        let p = problem(
            vec![ChebSeries::constant(1.0), x],
            f,
            vec![ConstraintFunctional::point(-1.0), ConstraintFunctional::neumann(1.0)],
            vec![(-2.0f64).sin(), 2.0 * 2.0f64.cos()],
        );
        for backend in [Backend::AlmostBandedQr, Backend::DenseQr, Backend::BiCgStab] {
            for v in [UsVariant::Plain, UsVariant::Preconditioned] {
                let s = solve_us(&p, &UsOptions::fixed(40, v).with_backend(backend)).unwrap();
                // plain US conditioning grows like n^2
                let tol = if v == UsVariant::Plain { 1e-11 } else { 1e-12 };
                for t in [-0.9f64, 0.0, 0.7] {
                    let e = (2.0 * t).sin();
                    assert!((s.u.eval(t).unwrap() - e).abs() < tol, "{backend:?} {v:?}");
                }
            }
        }
    }

    #[test]
    fn operator_matches_assembly() {
        let a0 = adaptive_approx(|t| t.cos(), 1e-15).unwrap();
        let a1 = adaptive_approx(|t| t.exp(), 1e-15).unwrap();
        let a2 = ChebSeries::chebyshev(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let p = problem(
            vec![a0, a1, a2],
            ChebSeries::constant(1.0),
            vec![
                ConstraintFunctional::point(-1.0),
                ConstraintFunctional::point(1.0),
                ConstraintFunctional::neumann(1.0),
            ],
            vec![0.0; 3],
        );
        let n = 64;
        let sys = assemble_us(&p, n).unwrap();
        for pre in [false, true] {
            let (op, rhs) = UsOperator::new(&p, n, pre).unwrap();
            assert_eq!(rhs, sys.rhs);
            let a = if pre { precondition_us(&sys) } else { sys.a_n.clone() };
            let x: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
            let y1 = a.matvec(&x);
            let y2 = op.apply(&x);
            let scale = a.norm_inf();
            for (u, v) in y1.iter().zip(&y2) {
                assert!((u - v).abs() < 1e3 * f64::EPSILON * scale, "{u} {v}");
            }
        }
    }

    #[test]
    fn plain_and_preconditioned_agree() {
        let a0 = adaptive_approx(|t| 1.0 / (1.0 + 4.0 * t * t), 1e-15).unwrap();
        let p = problem(
            vec![a0],
            ChebSeries::constant(1.0),
            vec![ConstraintFunctional::point(0.3)],
            vec![0.5],
        );
        let a = solve_us(&p, &UsOptions::fixed(128, UsVariant::Plain)).unwrap();
        let b = solve_us(&p, &UsOptions::fixed(128, UsVariant::Preconditioned)).unwrap();
        for (x, y) in a.u.coeffs().iter().zip(b.u.coeffs()) {
            assert!((x - y).abs() < 1e3 * f64::EPSILON);
        }
    }
}
