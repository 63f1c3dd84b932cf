//! Solves, condition numbers, sparsity patterns and error norms shared by
//! the subcommands and the reproduction runs.

use std::fmt::Write as _;

use faer::Mat;
use specsolve_core::cheb::{cc_integrate, cheb_point_residuals, cheb_points, coeffs_to_vals, vals_to_coeffs, GridKind};
use specsolve_core::collocation::{
    assemble_collocation, birkhoff_psim, preconditioned_system, solve_collocation, CollocationOptions,
    PointPair,
};
use specsolve_core::integral::{assemble_cs, Resolution};
use specsolve_core::operators::SparsityPattern;
use specsolve_core::prelude::*;
use specsolve_core::solvers::{adaptive_solve, cond2_estimate, dense_lu_solve, residual_inf, AdaptiveOptions};
use specsolve_core::ultraspherical::{assemble_us, precondition_us};

use crate::error::{CliError, CliResult};
use crate::problem_file::{Method, ProblemFile};

/// Truncation request: `n` for the coefficient methods, `M` for collocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Size {
    Fixed(usize),
    Adaptive,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub method: Method,
    pub u: ChebSeries,
    pub diagnostics: SolveDiagnostics,
}

fn resolution(size: Size) -> Resolution {
    match size {
        Size::Fixed(n) => Resolution::Fixed(n),
        Size::Adaptive => Resolution::Adaptive(AdaptiveOptions::default()),
    }
}

fn us_variant(method: Method) -> UsVariant {
    if method == Method::Pus {
        UsVariant::Preconditioned
    } else {
        UsVariant::Plain
    }
}

fn collocation_at(problem: &OdeProblem, big_m: usize, backend: Backend, cond: bool) -> CliResult<Solved> {
    let mut opts = CollocationOptions::new(big_m).with_backend(backend);
    if cond {
        opts = opts.with_cond();
    }
    let s = solve_collocation(problem, &opts)?;
    Ok(Solved {
        method: Method::Colloc,
        u: s.u,
        diagnostics: s.diagnostics,
    })
}

fn gcs_at(problem: &OdeProblem, big_m: usize, cond: bool) -> CliResult<Solved> {
    let pair = PointPair::new(big_m, problem.order())?;
    let (a, g) = assemble_collocation(problem, &pair)?;
    let u_x = dense_lu_solve(a.as_ref(), &g)?;
    let mut diag = SolveDiagnostics::new(big_m, Backend::DenseLu, residual_inf(a.as_ref(), &u_x, &g));
    if cond {
        diag.cond2 = Some(cond2_estimate(a.as_ref())?);
    }
    Ok(Solved {
        method: Method::Gcs,
        u: vals_to_coeffs(&u_x)?,
        diagnostics: diag,
    })
}

/// Solves `problem` with the requested discretization and backend.
pub fn solve(problem: &OdeProblem, method: Method, size: Size, backend: Backend, cond: bool) -> CliResult<Solved> {
    match method {
        Method::Cs => {
            let mut opts = CsOptions::fixed(0).with_backend(backend);
            opts.resolution = resolution(size);
            if cond {
                opts = opts.with_cond();
            }
            let s = solve_cs(problem, &opts)?;
            Ok(Solved {
                method,
                u: s.u,
                diagnostics: s.diagnostics,
            })
        }
        Method::Us | Method::Pus => {
            let mut opts = UsOptions::fixed(0, us_variant(method)).with_backend(backend);
            opts.resolution = resolution(size);
            if cond {
                opts = opts.with_cond();
            }
            let s = solve_us(problem, &opts)?;
            Ok(Solved {
                method,
                u: s.u,
                diagnostics: s.diagnostics,
            })
        }
        Method::Colloc | Method::Gcs => {
            let at = |big_m: usize| -> CliResult<Solved> {
                if method == Method::Colloc {
                    collocation_at(problem, big_m, backend, cond)
                } else {
                    gcs_at(problem, big_m, cond)
                }
            };
            match size {
                Size::Fixed(big_m) => at(big_m),
                Size::Adaptive => {
                    let mut failure = None;
                    let start = AdaptiveOptions {
                        n_start: 2 * (problem.max_coeff_degree() + problem.order()).max(16),
                        ..AdaptiveOptions::default()
                    };
                    let res = adaptive_solve(
                        |big_m| match at(big_m) {
                            Ok(s) => Ok((s.u.coeffs().to_vec(), s)),
                            Err(e) => {
                                let msg = e.to_string();
                                failure = Some(e);
                                Err(SpectralError::Internal(msg))
                            }
                        },
                        start,
                    );
                    match (res, failure) {
                        (_, Some(e)) => Err(e),
                        (Ok((_, s, _)), None) => Ok(s),
                        (Err(e), None) => Err(e.into()),
                    }
                }
            }
        }
    }
}

/// Dense system matrix of a discretization at size `n` (`M` for the
/// collocation methods).
pub fn system_matrix(problem: &OdeProblem, method: Method, n: usize) -> CliResult<Mat<f64>> {
    Ok(match method {
        Method::Cs => assemble_cs(problem, n)?.matrix.to_dense(),
        Method::Us => assemble_us(problem, n)?.a_n.to_dense(),
        Method::Pus => precondition_us(&assemble_us(problem, n)?).to_dense(),
        Method::Colloc => {
            let pair = PointPair::new(n, problem.order())?;
            let bundle = birkhoff_psim(&pair, problem.constraints())?;
            preconditioned_system(problem, &bundle)?.0
        }
        Method::Gcs => {
            let pair = PointPair::new(n, problem.order())?;
            assemble_collocation(problem, &pair)?.0
        }
    })
}

/// Size above which condition numbers need the Lanczos estimator.
pub const DENSE_COND_BUDGET: usize = specsolve_core::solvers::LANCZOS_THRESHOLD;

/// `cond_2` of the system matrix. Sizes above [`DENSE_COND_BUDGET`] are
/// refused unless `allow_lanczos` is set.
pub fn condition_number(problem: &OdeProblem, method: Method, n: usize, allow_lanczos: bool) -> CliResult<f64> {
    if n > DENSE_COND_BUDGET && !allow_lanczos {
        return Err(SpectralError::Budget {
            n,
            limit: DENSE_COND_BUDGET,
        }
        .into());
    }
    let a = system_matrix(problem, method, n)?;
    Ok(cond2_estimate(a.as_ref())?)
}

/// `rows[i][j]` is the condition number for `ns[i]` and `methods[j]`.
pub fn cond_table(problem: &OdeProblem, methods: &[Method], ns: &[usize], allow_lanczos: bool) -> CliResult<Vec<Vec<f64>>> {
    ns.iter()
        .map(|&n| {
            methods
                .iter()
                .map(|&m| condition_number(problem, m, n, allow_lanczos))
                .collect()
        })
        .collect()
}

/// Five significant digits.
pub fn sig5(v: f64) -> String {
    format!("{v:.4e}")
}

pub fn cond_table_csv(methods: &[Method], ns: &[usize], rows: &[Vec<f64>]) -> String {
    let mut out = String::from("n");
    for m in methods {
        out.push(',');
        out.push_str(m.name());
    }
    out.push('\n');
    for (n, row) in ns.iter().zip(rows) {
        out.push_str(&n.to_string());
        for v in row {
            out.push(',');
            out.push_str(&sig5(*v));
        }
        out.push('\n');
    }
    out
}

pub fn sparsity(problem: &OdeProblem, method: Method, n: usize) -> CliResult<SparsityPattern> {
    Ok(match method {
        Method::Cs => SparsityPattern::from_almost_banded(&assemble_cs(problem, n)?.matrix, None),
        Method::Us => SparsityPattern::from_almost_banded(&assemble_us(problem, n)?.a_n, None),
        Method::Pus => SparsityPattern::from_almost_banded(&precondition_us(&assemble_us(problem, n)?), None),
        Method::Colloc | Method::Gcs => SparsityPattern::from_dense(&system_matrix(problem, method, n)?, None),
    })
}

/// `j,coefficient` CSV of a Chebyshev series; values round-trip exactly.
pub fn coefficients_csv(u: &ChebSeries) -> String {
    let mut out = String::from("j,coefficient\n");
    for (j, c) in u.coeffs().iter().enumerate() {
        let _ = writeln!(out, "{j},{c:e}");
    }
    out
}

pub fn parse_coefficients_csv(text: &str) -> CliResult<ChebSeries> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "j,coefficient" => {}
        _ => return Err(CliError::Usage("coefficient file must start with 'j,coefficient'".into())),
    }
    let mut coeffs = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || CliError::Usage(format!("line {}: expected 'j,coefficient', found '{line}'", i + 1));
        let (j, c) = line.split_once(',').ok_or_else(bad)?;
        let j: usize = j.trim().parse().map_err(|_| bad())?;
        let c: f64 = c.trim().parse().map_err(|_| bad())?;
        if j != coeffs.len() {
            return Err(CliError::Usage(format!("line {}: expected index {}, found {j}", i + 1, coeffs.len())));
        }
        coeffs.push(c);
    }
    if coeffs.is_empty() {
        return Err(CliError::Usage("coefficient file has no rows".into()));
    }
    Ok(ChebSeries::chebyshev(coeffs)?)
}

/// Diagnostics block written by `solve`.
pub fn diagnostics_text(s: &Solved) -> String {
    let mut out = format!("discretization: {}\n", s.method);
    out.push_str(&s.diagnostics.to_string());
    if !out.ends_with('\n') {
        out.push('\n');
    }
    let _ = writeln!(out, "length: {}", s.u.len());
    out
}

fn l2_grid_size(degree: usize) -> usize {
    (2 * degree).max(64)
}

/// Reference function `g`, called as `g(x, dx)` for the value at the
/// double-double abscissa `x + dx`. References that cannot use `dx` may
/// ignore it at a cost of `|g'(x) dx|`.
pub type Reference<'a> = &'a dyn Fn(f64, f64) -> CliResult<f64>;

/// `(∫ (u - g)^2)^{1/2}` by Clenshaw-Curtis at twice the degree of `u`.
/// The series values come from the DCT at exact Chebyshev points, so `g`
/// receives each point's rounding residual.
pub fn l2_error(u: &ChebSeries, exact: Reference) -> CliResult<f64> {
    let n = l2_grid_size(u.degree());
    let grid = cheb_points(n, GridKind::GaussLobatto)?;
    let dx = cheb_point_residuals(n, GridKind::GaussLobatto)?;
    let uv = coeffs_to_vals(u, &grid)?;
    let sq = grid
        .points()
        .iter()
        .zip(&dx)
        .zip(&uv)
        .map(|((&x, &d), &v)| exact(x, d).map(|g| (v - g) * (v - g)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(cc_integrate(&sq)?.max(0.0).sqrt())
}

/// `max |u - g|` over 1000 equispaced points including `±1`.
pub fn linf_error(u: &ChebSeries, exact: Reference) -> CliResult<f64> {
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let x = -1.0 + 2.0 * i as f64 / 999.0;
        worst = worst.max((u.eval(x)? - exact(x, 0.0)?).abs());
    }
    Ok(worst)
}

/// `(∫ s^2)^{1/2}` of a Chebyshev series.
pub fn series_l2(s: &ChebSeries) -> CliResult<f64> {
    let grid = cheb_points(l2_grid_size(s.degree()), GridKind::GaussLobatto)?;
    let sq: Vec<f64> = coeffs_to_vals(s, &grid)?.iter().map(|v| v * v).collect();
    Ok(cc_integrate(&sq)?.max(0.0).sqrt())
}

/// L² norm of `u^(m) + Σ a^k u^(k) - f` formed in coefficient space from
/// the problem's Chebyshev data: the derivative of the computed solution
/// against the equation it was computed from.
pub fn consistency_l2(problem: &OdeProblem, u: &ChebSeries) -> CliResult<f64> {
    series_l2(&problem.residual_series(u)?)
}

/// L² norm of `u^(m) + Σ a^k u^(k) - f` with `a^k` and `f` evaluated from
/// the file's expressions rather than their approximations.
pub fn residual_l2(file: &ProblemFile, u: &ChebSeries) -> CliResult<f64> {
    let m = file.order;
    let n = l2_grid_size(u.degree() + m);
    let grid = cheb_points(n, GridKind::GaussLobatto)?;
    let dx = cheb_point_residuals(n, GridKind::GaussLobatto)?;
    let at = || grid.points().iter().zip(&dx);
    let mut r = coeffs_to_vals(&u.derivative(m)?, &grid)?;
    for (k, a) in file.coeffs.iter().enumerate() {
        if *a == crate::expr::Expr::Num(0.0) {
            continue;
        }
        let dk = coeffs_to_vals(&u.derivative(k)?, &grid)?;
        for ((ri, (&x, &d)), v) in r.iter_mut().zip(at()).zip(&dk) {
            *ri += a.eval_at(x, d)? * v;
        }
    }
    for (ri, (&x, &d)) in r.iter_mut().zip(at()) {
        *ri -= file.rhs.eval_at(x, d)?;
    }
    let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
    Ok(cc_integrate(&sq)?.max(0.0).sqrt())
}

/// `max |u^(m) + Σ a^k u^(k) - f|` over 1000 equispaced points.
pub fn residual_linf(file: &ProblemFile, u: &ChebSeries) -> CliResult<f64> {
    let m = file.order;
    let derivs = (0..=m).map(|k| u.derivative(k)).collect::<Result<Vec<_>, _>>()?;
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let x = -1.0 + 2.0 * i as f64 / 999.0;
        let mut r = derivs[m].eval(x)? - file.rhs.eval(x)?;
        for (k, a) in file.coeffs.iter().enumerate() {
            r += a.eval(x)? * derivs[k].eval(x)?;
        }
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Outcome of a Bi-CGSTAB run at fixed size.
#[derive(Debug, Clone)]
pub struct IterationRun {
    /// `None` when the solver failed to converge or broke down.
    pub iterations: Option<usize>,
    pub u: Option<ChebSeries>,
}

pub fn bicgstab_run(problem: &OdeProblem, method: Method, n: usize) -> CliResult<IterationRun> {
    match solve(problem, method, Size::Fixed(n), Backend::BiCgStab, false) {
        Ok(s) => Ok(IterationRun {
            iterations: s.diagnostics.iterations,
            u: Some(s.u),
        }),
        Err(CliError::Spectral(SpectralError::SolverFailure { .. } | SpectralError::SolverBreakdown { .. })) => {
            Ok(IterationRun {
                iterations: None,
                u: None,
            })
        }
        Err(e) => Err(e),
    }
}
