//! Chebyshev spectral method on the integral reformulation.
//!
//! With `v = u^(m)` the constraints determine `u` from `v` as
//! `u = Q^m v + X (BX)^{-1} (b - B Q^m v)`, where `Q` is spectral
//! integration and the columns of `X` are the monomials `1, x, .., x^{m-1}`.
//! Substituting into the ODE gives
//!
//! ```text
//! (I + Σ_k M_0[a^k] Q^{m-k} - A (BX)^{-1} B Q^m) v = f - A (BX)^{-1} b
//! ```
//!
//! where column `j` of `A` holds the coefficients of `Σ_k a^k (x^j)^(k)`.
//! The operator is identity plus compact, so its sections stay well
//! conditioned as `n` grows; a section is almost banded with about
//! `deg a + m` dense rows.

use faer::Mat;

use crate::cheb::{monomial_coeffs, ChebSeries};
use crate::error::{Result, SpectralError};
use crate::operators::{
    integration_power, mult_op_cheb_rect, AlmostBandedMatrix, LinearOperator,
    MultiplicationOperator, OperatorTruncation,
};
use crate::problem::{ConstraintGram, OdeProblem};
use crate::solvers::{
    adaptive_solve, almost_banded_qr_solve, bicgstab_solve, cond2_estimate, dense_lu_solve,
    dense_qr_solve, residual_inf, AdaptiveOptions, Backend, SolveDiagnostics,
};

/// `X` (monomial coefficients) and `A` (the operator applied to monomials).
#[derive(Debug, Clone)]
pub struct MonomialBlock {
    /// `n x m`; column `j` holds the Chebyshev coefficients of `x^j`.
    pub x: Mat<f64>,
    /// `n x m`; column `j` holds the coefficients of `Σ_k a^k(x) (x^j)^(k)`.
    pub a_blk: Mat<f64>,
    pub gram: ConstraintGram,
}

fn falling_factorial(j: usize, k: usize) -> f64 {
    (0..k).map(|i| (j - i) as f64).product()
}

/// Builds `P_n X`, `P_n A` and `(BX)^{-1}`. Columns of `A` have length
/// `deg a + m`; shorter `n` truncates them.
pub fn build_monomial_block(problem: &OdeProblem, n: usize) -> Result<MonomialBlock> {
    let m = problem.order();
    if n < m {
        return Err(SpectralError::InvalidTruncation {
            n,
            reason: format!("the monomial block needs n >= {m}"),
        });
    }
    let gram = problem.constraints().monomial_gram()?;
    let x = Mat::from_fn(n, m, |i, j| monomial_coeffs(j, n)[i]);
    let mut a_blk = Mat::<f64>::zeros(n, m);
    for j in 0..m {
        for k in 0..=j.min(m - 1) {
            let a = problem.coeff(k);
            if a.is_zero() {
                continue;
            }
            let p = j - k;
            let mono = monomial_coeffs(p, p + 1);
            let prod = mult_op_cheb_rect(a, n, p + 1)?.apply(&mono);
            let f = falling_factorial(j, k);
            for (i, v) in prod.iter().enumerate() {
                a_blk[(i, j)] += f * v;
            }
        }
    }
    Ok(MonomialBlock { x, a_blk, gram })
}

/// Assembled section `Ã_n` and right-hand side.
#[derive(Debug, Clone)]
pub struct CsSystem {
    pub matrix: AlmostBandedMatrix,
    pub rhs: Vec<f64>,
    pub block: MonomialBlock,
}

fn check_size(problem: &OdeProblem, n: usize) -> Result<()> {
    let need = problem.order() + 2;
    if n < need {
        return Err(SpectralError::InvalidTruncation {
            n,
            reason: format!("the integral reformulation needs n >= {need}"),
        });
    }
    Ok(())
}

/// `B Q^m` restricted to the first `n` columns (`m x n`).
fn constraint_integrals(problem: &OdeProblem, n: usize) -> Result<Vec<Vec<f64>>> {
    let m = problem.order();
    let qm = integration_power(m, n + m, n)?;
    Ok(problem
        .constraints()
        .rows(n + m)
        .iter()
        .map(|row| qm.matrix.matvec_transpose(row))
        .collect())
}

/// `(A (BX)^{-1})` as an `n x m` matrix.
fn a_times_gram_inverse(block: &MonomialBlock) -> Mat<f64> {
    &block.a_blk * &block.gram.inverse
}

/// `f - A (BX)^{-1} b` at length `n`.
fn reformulated_rhs(problem: &OdeProblem, block: &MonomialBlock, n: usize) -> Vec<f64> {
    let mut rhs = problem.rhs().padded(n);
    let w = block.gram.solve(problem.targets());
    for i in 0..n {
        let s: f64 = (0..w.len()).map(|j| block.a_blk[(i, j)] * w[j]).sum();
        rhs[i] -= s;
    }
    rhs
}

/// Assembles `P_n (I + Σ M_0[a^k] Q^{m-k} - A (BX)^{-1} B Q^m) P_nᵀ` with the
/// rank-`m` term folded into the dense top rows.
pub fn assemble_cs(problem: &OdeProblem, n: usize) -> Result<CsSystem> {
    check_size(problem, n)?;
    let m = problem.order();
    let block = build_monomial_block(problem, n)?;
    let mut acc = OperatorTruncation::identity(n, crate::cheb::Basis::ChebyshevT);
    for k in 0..m {
        let a = problem.coeff(k);
        if a.is_zero() {
            continue;
        }
        let p = m - k;
        let q = integration_power(p, n + p, n)?;
        let term = mult_op_cheb_rect(a, n, n + p)?.compose(&q)?;
        acc = acc.add(&term)?;
    }
    let ag = a_times_gram_inverse(&block);
    let rank_rows = (0..n)
        .rev()
        .find(|&i| (0..m).any(|j| ag[(i, j)] != 0.0))
        .map_or(0, |i| i + 1);
    let mut matrix = acc.matrix;
    if rank_rows > 0 {
        matrix = matrix.restructure(0, 0, rank_rows);
        let bq = constraint_integrals(problem, n)?;
        for i in 0..rank_rows.min(matrix.dense_rows()) {
            let row = matrix.dense_row_mut(i);
            for (j, bqj) in bq.iter().enumerate() {
                let w = ag[(i, j)];
                if w == 0.0 {
                    continue;
                }
                for (r, b) in row.iter_mut().zip(bqj) {
                    *r -= w * b;
                }
            }
        }
    }
    let rhs = reformulated_rhs(problem, &block, n);
    Ok(CsSystem { matrix, rhs, block })
}

/// Coefficients of `u = Q^m v + X (BX)^{-1} (b - B Q^m v)`, of length
/// `len(v) + m` (the exact antiderivative of a length-`n` `v`).
pub fn recover_u(v: &[f64], problem: &OdeProblem) -> Result<ChebSeries> {
    let n = v.len();
    if n == 0 {
        return Err(SpectralError::InvalidArgument("empty solution vector".into()));
    }
    let m = problem.order();
    let gram = problem.constraints().monomial_gram()?;
    let qm = integration_power(m, n + m, n)?;
    let mut u = qm.apply(v);
    let bq = problem.constraints().apply(&u);
    let resid: Vec<f64> = problem
        .targets()
        .iter()
        .zip(&bq)
        .map(|(b, q)| b - q)
        .collect();
    let alpha = gram.solve(&resid);
    for (j, a) in alpha.iter().enumerate() {
        for (ui, c) in u.iter_mut().zip(monomial_coeffs(j, j + 1)) {
            *ui += a * c;
        }
    }
    ChebSeries::chebyshev(u)
}

/// Matrix-free `Ã_n`, applied in `O(n log n)` when coefficients have high
/// degree (Toeplitz-plus-Hankel products through FFTs).
pub struct CsOperator {
    n: usize,
    terms: Vec<(MultiplicationOperator, AlmostBandedMatrix)>,
    ag: Mat<f64>,
    bq: Vec<Vec<f64>>,
}

impl CsOperator {
    pub fn new(problem: &OdeProblem, n: usize) -> Result<(Self, Vec<f64>)> {
        check_size(problem, n)?;
        let m = problem.order();
        let block = build_monomial_block(problem, n)?;
        let mut terms = Vec::new();
        for k in 0..m {
            let a = problem.coeff(k);
            if a.is_zero() {
                continue;
            }
            let p = m - k;
            let q = integration_power(p, n + p, n)?.matrix;
            terms.push((MultiplicationOperator::new(a, n, n + p)?, q));
        }
        let ag = a_times_gram_inverse(&block);
        let bq = constraint_integrals(problem, n)?;
        let rhs = reformulated_rhs(problem, &block, n);
        Ok((Self { n, terms, ag, bq }, rhs))
    }
}

impl LinearOperator for CsOperator {
    fn nrows(&self) -> usize {
        self.n
    }
    fn ncols(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        let mut tmp = vec![0.0; self.n];
        for (mult, q) in &self.terms {
            let w = q.matvec(x);
            mult.apply_into(&w, &mut tmp);
            for (a, b) in y.iter_mut().zip(&tmp) {
                *a += b;
            }
        }
        let c: Vec<f64> = self
            .bq
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        for (i, yi) in y.iter_mut().enumerate() {
            let s: f64 = c.iter().enumerate().map(|(j, cj)| self.ag[(i, j)] * cj).sum();
            *yi -= s;
        }
    }
}

/// Truncation choice for [`solve_cs`] and the other solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    Fixed(usize),
    Adaptive(AdaptiveOptions),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsOptions {
    pub resolution: Resolution,
    pub backend: Backend,
    /// Also report `cond_2(Ã_n)` (dense materialization, `n <= 8192`).
    pub compute_cond: bool,
    /// Relative residual tolerance of the iterative backend.
    pub iter_tol: f64,
    /// Iteration cap of the iterative backend (default `10 n`).
    pub max_iter: Option<usize>,
}

impl CsOptions {
    pub fn fixed(n: usize) -> Self {
        Self {
            resolution: Resolution::Fixed(n),
            backend: Backend::Auto,
            compute_cond: false,
            iter_tol: 1e-14,
            max_iter: None,
        }
    }

    pub fn adaptive() -> Self {
        Self {
            resolution: Resolution::Adaptive(AdaptiveOptions::default()),
            ..Self::fixed(0)
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
pub struct CsSolution {
    pub u: ChebSeries,
    /// `u^(m)` at the truncation used.
    pub v: ChebSeries,
    pub diagnostics: SolveDiagnostics,
}

/// Backend used for `Auto`: almost-banded QR while the structure is narrow
/// compared with `n` or `n <= 512`, dense QR for wide systems up to 4096,
/// Bi-CGSTAB with fast products beyond.
pub fn auto_backend(width: usize, n: usize) -> Backend {
    if 8 * width <= n || n <= 512 {
        Backend::AlmostBandedQr
    } else if n <= 4096 {
        Backend::DenseQr
    } else {
        Backend::BiCgStab
    }
}

fn solve_cs_at(problem: &OdeProblem, n: usize, opts: &CsOptions) -> Result<(Vec<f64>, SolveDiagnostics)> {
    let m = problem.order();
    let d = problem.max_coeff_degree();
    let backend = match opts.backend {
        Backend::Auto => auto_backend(3 * (d + m), n),
        b => b,
    };
    let (v, mut diag, assembled) = match backend {
        Backend::BiCgStab => {
            let (op, rhs) = CsOperator::new(problem, n)?;
            let out = bicgstab_solve(&op, &rhs, opts.iter_tol, opts.max_iter.unwrap_or(10 * n))?;
            (out.x, out.diagnostics, None)
        }
        Backend::AlmostBandedQr => {
            let sys = assemble_cs(problem, n)?;
            let (x, d) = almost_banded_qr_solve(&sys.matrix, &sys.rhs)?;
            (x, d, Some(sys))
        }
        Backend::DenseQr | Backend::DenseLu | Backend::Auto => {
            let sys = assemble_cs(problem, n)?;
            let a = sys.matrix.to_dense();
            let x = if backend == Backend::DenseLu {
                dense_lu_solve(a.as_ref(), &sys.rhs)?
            } else {
                dense_qr_solve(a.as_ref(), &sys.rhs)?
            };
            let mut d = SolveDiagnostics::new(n, backend, residual_inf(a.as_ref(), &x, &sys.rhs));
            if opts.compute_cond {
                d.cond2 = Some(cond2_estimate(a.as_ref())?);
            }
            (x, d, None)
        }
    };
    if opts.compute_cond && diag.cond2.is_none() {
        let sys = match assembled {
            Some(s) => s,
            None => assemble_cs(problem, n)?,
        };
        diag.cond2 = Some(cond2_estimate(sys.matrix.to_dense().as_ref())?);
    }
    Ok((v, diag))
}

/// Solves with the integral reformulation at a fixed or adaptively chosen
/// truncation.
pub fn solve_cs(problem: &OdeProblem, opts: &CsOptions) -> Result<CsSolution> {
    let (v, mut diag, n) = match opts.resolution {
        Resolution::Fixed(n) => {
            let (v, d) = solve_cs_at(problem, n, opts)?;
            (v, d, n)
        }
        Resolution::Adaptive(mut a) => {
            let start = 2 * (problem.max_coeff_degree() + problem.order());
            a.n_start = a.n_start.max(start);
            adaptive_solve(|n| solve_cs_at(problem, n, opts), a)?
        }
    };
    diag.n_used = n;
    let u = recover_u(&v, problem)?;
    Ok(CsSolution {
        u,
        v: ChebSeries::chebyshev(v)?,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::adaptive_approx;
    use crate::problem::{ConstraintFunctional, ConstraintSet};

    fn first_order(a0: ChebSeries, f: ChebSeries, x0: f64, b: f64) -> OdeProblem {
        OdeProblem::new(
            vec![a0],
            f,
            ConstraintSet::new(vec![ConstraintFunctional::point(x0)]),
            vec![b],
        )
        .unwrap()
    }

    #[test]
    fn monomial_block_examples() {
        let a0 = ChebSeries::chebyshev(vec![0.5, 2.0]).unwrap();
        let a1 = ChebSeries::chebyshev(vec![0.0, 0.0, 1.0]).unwrap();
        let p = OdeProblem::new(
            vec![a0.clone(), a1.clone()],
            ChebSeries::zero(),
            ConstraintSet::new(vec![
                ConstraintFunctional::point(-1.0),
                ConstraintFunctional::point(1.0),
            ]),
            vec![0.0, 0.0],
        )
        .unwrap();
        let blk = build_monomial_block(&p, 8).unwrap();
        // column 0: a0
        assert_eq!(blk.a_blk[(0, 0)], 0.5);
        assert_eq!(blk.a_blk[(1, 0)], 2.0);
        // column 1: a0 x + a1 = 0.5 T1 + 2 (T0 + T2)/2 + T2
        let expect = [1.0, 0.5, 2.0, 0.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((blk.a_blk[(i, 1)] - e).abs() < 1e-15);
        }
        let p3 = OdeProblem::new(
            vec![ChebSeries::zero(); 3],
            ChebSeries::zero(),
            ConstraintSet::new(vec![
                ConstraintFunctional::point(-1.0),
                ConstraintFunctional::point(0.0),
                ConstraintFunctional::point(1.0),
            ]),
            vec![0.0; 3],
        )
        .unwrap();
        let blk = build_monomial_block(&p3, 4).unwrap();
        let cols = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.5, 0.0, 0.5, 0.0]];
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                assert_eq!(blk.x[(i, j)], *v);
            }
        }
    }

    #[test]
    fn zero_coefficients_give_identity() {
        let f = ChebSeries::chebyshev(vec![1.0, 2.0, 3.0]).unwrap();
        let p = first_order(ChebSeries::zero(), f, -1.0, 0.0);
        let sys = assemble_cs(&p, 10).unwrap();
        let d = sys.matrix.to_dense();
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(d[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(&sys.rhs[..4], &[1.0, 2.0, 3.0, 0.0]);
    }

    #[test]
    fn recovery_examples() {
        let p = first_order(ChebSeries::zero(), ChebSeries::zero(), -1.0, 0.0);
        let u = recover_u(&[1.0, 0.0, 0.0], &p).unwrap();
        assert!((u.coeffs()[0] - 1.0).abs() < 1e-16 && (u.coeffs()[1] - 1.0).abs() < 1e-16);
        assert!(u.coeffs()[2..].iter().all(|c| c.abs() < 1e-16));
        let p = first_order(ChebSeries::zero(), ChebSeries::zero(), -1.0, 5.0);
        let u = recover_u(&[0.0, 0.0, 0.0], &p).unwrap();
        assert_eq!(u.coeffs()[0], 5.0);
        assert!(u.coeffs()[1..].iter().all(|c| *c == 0.0));
    }

    #[test]
    fn trivial_solve() {
        let p = first_order(ChebSeries::zero(), ChebSeries::zero(), -1.0, 3.0);
        let s = solve_cs(&p, &CsOptions::fixed(8)).unwrap();
        assert!((s.u.coeffs()[0] - 3.0).abs() < 1e-15);
        assert!(s.u.coeffs()[1..].iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn exponential_solution() {
        // u' + u = 0, u(-1) = 1  =>  u = exp(-(x + 1))
        let p = first_order(ChebSeries::constant(1.0), ChebSeries::zero(), -1.0, 1.0);
        for backend in [Backend::AlmostBandedQr, Backend::DenseQr, Backend::BiCgStab] {
            let s = solve_cs(&p, &CsOptions::fixed(32).with_backend(backend)).unwrap();
            for x in [-1.0, -0.3, 0.5, 1.0] {
                let e = (-(x + 1.0f64)).exp();
                assert!((s.u.eval(x).unwrap() - e).abs() < 1e-14, "{backend:?}");
            }
        }
    }

    #[test]
    fn operator_matches_assembled_matrix() {
        let a0 = adaptive_approx(|x| 1.0 / (1.0 + 25.0 * x * x), 1e-14).unwrap();
        let a1 = adaptive_approx(|x| x.sin(), 1e-14).unwrap();
        let p = OdeProblem::new(
            vec![a0, a1],
            ChebSeries::constant(1.0),
            ConstraintSet::new(vec![
                ConstraintFunctional::point(-1.0),
                ConstraintFunctional::neumann(1.0),
            ]),
            vec![1.0, 0.0],
        )
        .unwrap();
        let n = 300;
        let sys = assemble_cs(&p, n).unwrap();
        let (op, rhs) = CsOperator::new(&p, n).unwrap();
        assert_eq!(rhs, sys.rhs);
        let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / (1.0 + i as f64)).collect();
        let y1 = sys.matrix.matvec(&x);
        let y2 = op.apply(&x);
        let scale = sys.matrix.norm_inf();
        for (a, b) in y1.iter().zip(&y2) {
            assert!((a - b).abs() < 1e3 * f64::EPSILON * scale);
        }
    }

    #[test]
    fn constraints_are_reproduced() {
        let a0 = ChebSeries::chebyshev(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let f = adaptive_approx(|x| (5.0 * x).cos(), 1e-14).unwrap();
        let p = first_order(a0, f, 0.25, -2.0);
        let s = solve_cs(&p, &CsOptions::adaptive()).unwrap();
        let b = p.constraints().apply(s.u.coeffs());
        let vmax = s.v.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        assert!((b[0] + 2.0).abs() <= 1e3 * f64::EPSILON * (1.0 + vmax));
        let r = p.residual_series(&s.u).unwrap();
        assert!(r.coeffs().iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn antiderivative_consistency() {
        // m = 1, a = 0: recovered u differentiates back to f
        let f = adaptive_approx(|x| (3.0 * x).exp() * x.cos(), 1e-14).unwrap();
        let p = first_order(ChebSeries::zero(), f.clone(), 1.0, 0.5);
        let s = solve_cs(&p, &CsOptions::fixed(64)).unwrap();
        let du = s.u.derivative(1).unwrap();
        let fmax = f.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for j in 0..64 {
            let a = du.coeffs().get(j).copied().unwrap_or(0.0);
            let b = f.coeffs().get(j).copied().unwrap_or(0.0);
            assert!((a - b).abs() <= 1e3 * f64::EPSILON * fmax);
        }
    }
}
