use faer::Mat;

use super::barycentric::{grid_diff_matrix, grid_resampling_matrix};
use super::psim::{birkhoff_psim, constraint_disc, BirkhoffLift, PointPair, PsimBundle};
use crate::cheb::{derivative_coeffs, ChebSeries, ChebTransform, GridKind};
use crate::error::{Result, SpectralError};
use crate::operators::LinearOperator;
use crate::problem::OdeProblem;
use crate::solvers::{
    bicgstab_solve, cond2_estimate, dense_lu_solve, dense_qr_solve, residual_inf, Backend,
    SolveDiagnostics,
};

fn check_order(problem: &OdeProblem, pair: &PointPair) -> Result<()> {
    if problem.order() != pair.order() {
        return Err(SpectralError::InvalidArgument(format!(
            "grid pair is built for order {}, problem has order {}",
            pair.order(),
            problem.order()
        )));
    }
    Ok(())
}

/// Values of the coefficient functions on the `y` grid, skipping zero ones.
fn coeff_values(problem: &OdeProblem, ty: &ChebTransform) -> Vec<(usize, Vec<f64>)> {
    (0..problem.order())
        .filter(|&k| !problem.coeff(k).is_zero())
        .map(|k| (k, ty.coeffs_to_vals(problem.coeff(k).coeffs())))
        .collect()
}

/// Global collocation system `A u = g` with
/// `A = [D^(m)_{x->y} + Σ diag(a^k(y)) D^(k)_{x->y}; L_B]` and `g = [f(y); b]`.
pub fn assemble_collocation(problem: &OdeProblem, pair: &PointPair) -> Result<(Mat<f64>, Vec<f64>)> {
    check_order(problem, pair)?;
    let m = problem.order();
    let x = pair.x().points();
    let my = pair.big_m() + 1;
    let n1 = x.len();
    let ty = ChebTransform::new(my, GridKind::Gauss)?;
    let a_vals = coeff_values(problem, &ty);
    let p = grid_resampling_matrix(pair.x(), pair.y())?;
    let d1 = grid_diff_matrix(pair.x(), 1)?;
    // Σ_k diag(a^k) D^(k)_{x->x}, then resample once
    let mut sum = Mat::<f64>::zeros(n1, n1);
    let mut dk = Mat::<f64>::identity(n1, n1);
    let mut a_rows = Mat::<f64>::zeros(my, n1);
    for k in 0..=m {
        if k > 0 {
            dk = &d1 * &dk;
        }
        if k == m {
            sum += &dk;
        } else if let Some((_, a)) = a_vals.iter().find(|(j, _)| *j == k) {
            // diag(a^k(y)) P D^(k): accumulate per row after resampling
            let pd = &p * &dk;
            for i in 0..my {
                for j in 0..n1 {
                    a_rows[(i, j)] += a[i] * pd[(i, j)];
                }
            }
        }
    }
    let top = &(&p * &sum) + &a_rows;
    let lb = constraint_disc(problem.constraints(), pair.x())?;
    let a = Mat::from_fn(n1, n1, |i, j| if i < my { top[(i, j)] } else { lb[(i - my, j)] });
    let mut g = ty.coeffs_to_vals(problem.rhs().coeffs());
    g.extend_from_slice(problem.targets());
    Ok((a, g))
}

/// `Ã = I + Σ diag(a^k(y)) B̃^(k-m)` and `f̃ = f - Σ diag(a^k(y)) B̂^(k-m) b`.
pub fn preconditioned_system(problem: &OdeProblem, bundle: &PsimBundle) -> Result<(Mat<f64>, Vec<f64>)> {
    check_order(problem, &bundle.pair)?;
    let my = bundle.pair.big_m() + 1;
    let ty = ChebTransform::new(my, GridKind::Gauss)?;
    let mut a = Mat::<f64>::identity(my, my);
    let mut f = ty.coeffs_to_vals(problem.rhs().coeffs());
    let b = problem.targets();
    for (k, ak) in coeff_values(problem, &ty) {
        for i in 0..my {
            for j in 0..my {
                a[(i, j)] += ak[i] * bundle.btilde[k][(i, j)];
            }
            let s: f64 = (0..b.len()).map(|j| bundle.bhat[k][(i, j)] * b[j]).sum();
            f[i] -= ak[i] * s;
        }
    }
    Ok((a, f))
}

/// Solution of a collocation solve.
#[derive(Debug, Clone)]
pub struct CollocationSolution {
    /// `u` at the `N + 1` Gauss-Lobatto points.
    pub u_x: Vec<f64>,
    /// `u^(m)` at the `M + 1` Gauss points.
    pub v_y: Vec<f64>,
    /// Chebyshev coefficients of the degree-`N` interpolant of `u_x`.
    pub u: ChebSeries,
    pub diagnostics: SolveDiagnostics,
}

/// Dense PSIM-preconditioned solve: forms `Ã`, solves by LU and recovers
/// `u = B^(-m)_{y->x} [v; b]`.
pub fn precondition_solve(problem: &OdeProblem, pair: &PointPair, compute_cond: bool) -> Result<CollocationSolution> {
    let bundle = birkhoff_psim(pair, problem.constraints())?;
    let (a, f) = preconditioned_system(problem, &bundle)?;
    let v = dense_lu_solve(a.as_ref(), &f)?;
    let mut diag = SolveDiagnostics::new(v.len(), Backend::DenseLu, residual_inf(a.as_ref(), &v, &f));
    if compute_cond {
        diag.cond2 = Some(cond2_estimate(a.as_ref())?);
    }
    let mut vb = v.clone();
    vb.extend_from_slice(problem.targets());
    let n1 = vb.len();
    let u_x = (0..n1).map(|i| (0..n1).map(|j| bundle.b_full[(i, j)] * vb[j]).sum()).collect();
    let u = (0..n1).map(|i| (0..n1).map(|j| bundle.coeffs[(i, j)] * vb[j]).sum()).collect();
    Ok(CollocationSolution {
        u_x,
        v_y: v,
        u: ChebSeries::chebyshev(u)?,
        diagnostics: diag,
    })
}

/// Matrix-free `Ã`: `v` at `y` is transformed to Chebyshev coefficients,
/// lifted to the Birkhoff polynomial with homogeneous constraints,
/// differentiated and evaluated back at `y`. `O(m M log M)` per product.
pub struct PsimOperator {
    my: usize,
    lift: BirkhoffLift,
    ty: ChebTransform,
    a_vals: Vec<(usize, Vec<f64>)>,
    zero_b: Vec<f64>,
}

impl PsimOperator {
    pub fn new(problem: &OdeProblem, pair: &PointPair) -> Result<(Self, Vec<f64>)> {
        check_order(problem, pair)?;
        let my = pair.big_m() + 1;
        let ty = ChebTransform::new(my, GridKind::Gauss)?;
        let lift = BirkhoffLift::new(problem.constraints(), pair.big_m())?;
        let a_vals = coeff_values(problem, &ty);
        let mut f = ty.coeffs_to_vals(problem.rhs().coeffs());
        let q = lift.constraint_polynomial(problem.targets());
        let op = Self {
            my,
            lift,
            ty,
            a_vals,
            zero_b: vec![0.0; problem.order()],
        };
        let corr = op.lower_order_terms(q);
        for (fi, c) in f.iter_mut().zip(&corr) {
            *fi -= c;
        }
        Ok((op, f))
    }

    /// `Σ a^k(y) p^(k)(y)`.
    fn lower_order_terms(&self, mut p: Vec<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.my];
        let mut level = 0;
        for (k, a) in &self.a_vals {
            while level < *k {
                p = derivative_coeffs(&p);
                level += 1;
            }
            for ((o, ai), v) in out.iter_mut().zip(a).zip(self.ty.coeffs_to_vals(&p)) {
                *o += ai * v;
            }
        }
        out
    }

    /// Chebyshev coefficients of `u = B^(-m)_{y->x} [v; b]`.
    pub fn recover(&self, v: &[f64], b: &[f64]) -> Vec<f64> {
        self.lift.lift(&self.ty.vals_to_coeffs(v), b)
    }
}

impl LinearOperator for PsimOperator {
    fn nrows(&self) -> usize {
        self.my
    }
    fn ncols(&self) -> usize {
        self.my
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let p = self.lift.lift(&self.ty.vals_to_coeffs(x), &self.zero_b);
        let lo = self.lower_order_terms(p);
        for ((yi, xi), l) in y.iter_mut().zip(x).zip(&lo) {
            *yi = xi + l;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollocationOptions {
    /// `M`: the equation is collocated at `M + 1` Gauss points.
    pub big_m: usize,
    /// `Auto` picks dense LU for `M <= 1024`, Bi-CGSTAB on [`PsimOperator`]
    /// beyond.
    pub backend: Backend,
    pub compute_cond: bool,
    pub iter_tol: f64,
    pub max_iter: Option<usize>,
}

impl CollocationOptions {
    pub fn new(big_m: usize) -> Self {
        Self {
            big_m,
            backend: Backend::Auto,
            compute_cond: false,
            iter_tol: 1e-14,
            max_iter: None,
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

/// PSIM-preconditioned collocation with dense or matrix-free backend.
pub fn solve_collocation(problem: &OdeProblem, opts: &CollocationOptions) -> Result<CollocationSolution> {
    let pair = PointPair::new(opts.big_m, problem.order())?;
    let backend = match opts.backend {
        Backend::Auto if opts.big_m <= 1024 => Backend::DenseLu,
        Backend::Auto => Backend::BiCgStab,
        b => b,
    };
    match backend {
        Backend::DenseLu => precondition_solve(problem, &pair, opts.compute_cond),
        Backend::DenseQr => {
            let bundle = birkhoff_psim(&pair, problem.constraints())?;
            let (a, f) = preconditioned_system(problem, &bundle)?;
            let v = dense_qr_solve(a.as_ref(), &f)?;
            let mut diag = SolveDiagnostics::new(v.len(), Backend::DenseQr, residual_inf(a.as_ref(), &v, &f));
            if opts.compute_cond {
                diag.cond2 = Some(cond2_estimate(a.as_ref())?);
            }
            finish_iterative(problem, &pair, v, diag)
        }
        Backend::BiCgStab => {
            let (op, f) = PsimOperator::new(problem, &pair)?;
            let max_iter = opts.max_iter.unwrap_or(10 * f.len());
            let out = bicgstab_solve(&op, &f, opts.iter_tol, max_iter)?;
            let mut diag = out.diagnostics;
            if opts.compute_cond {
                let bundle = birkhoff_psim(&pair, problem.constraints())?;
                let (a, _) = preconditioned_system(problem, &bundle)?;
                diag.cond2 = Some(cond2_estimate(a.as_ref())?);
            }
            finish_iterative(problem, &pair, out.x, diag)
        }
        Backend::AlmostBandedQr | Backend::Auto => Err(SpectralError::InvalidArgument(format!(
            "collocation systems are dense; backend {backend} does not apply"
        ))),
    }
}

fn finish_iterative(
    problem: &OdeProblem,
    pair: &PointPair,
    v: Vec<f64>,
    diagnostics: SolveDiagnostics,
) -> Result<CollocationSolution> {
    let lift = BirkhoffLift::new(problem.constraints(), pair.big_m())?;
    let ty = ChebTransform::new(pair.big_m() + 1, GridKind::Gauss)?;
    let u = lift.lift(&ty.vals_to_coeffs(&v), problem.targets());
    let tx = ChebTransform::new(pair.big_n() + 1, GridKind::GaussLobatto)?;
    Ok(CollocationSolution {
        u_x: tx.coeffs_to_vals(&u),
        v_y: v,
        u: ChebSeries::chebyshev(u)?,
        diagnostics,
    })
}
