use super::{Backend, SolveDiagnostics};
use crate::error::{Result, SpectralError};
use crate::operators::LinearOperator;

/// Solution and diagnostics of a converged Bi-CGSTAB run.
#[derive(Debug, Clone)]
pub struct BicgstabOutcome {
    pub x: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
    /// `‖b - A x‖_2` tracked by the recurrence at termination.
    pub recursive_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unpreconditioned Bi-CGSTAB from `x_0 = 0`, stopping when
/// `‖r‖_2 <= tol ‖b‖_2`. One iteration is one pair of operator products.
pub fn bicgstab_solve(
    op: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<BicgstabOutcome> {
    let n = b.len();
    if op.nrows() != n || op.ncols() != n {
        return Err(SpectralError::InvalidArgument(format!(
            "operator is {}x{} with right-hand side of length {n}",
            op.nrows(),
            op.ncols()
        )));
    }
    let bnorm = norm2(b);
    let finish = |x: Vec<f64>, iters: usize, rr: f64| -> BicgstabOutcome {
        let ax = op.apply(&x);
        let res = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let mut d = SolveDiagnostics::new(n, Backend::BiCgStab, res);
        d.iterations = Some(iters);
        BicgstabOutcome {
            x,
            diagnostics: d,
            recursive_residual: rr,
        }
    };
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(finish(x, 0, 0.0));
    }
    let target = tol * bnorm;
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let tiny = f64::MIN_POSITIVE;
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() <= tiny || !rho_new.is_finite() {
            return Err(SpectralError::SolverBreakdown {
                iteration: it,
                reason: format!("rho = {rho_new:e}"),
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        op.apply_into(&p, &mut v);
        let denom = dot(&r_hat, &v);
        if denom.abs() <= tiny || !denom.is_finite() {
            return Err(SpectralError::SolverBreakdown {
                iteration: it,
                reason: format!("<r_hat, v> = {denom:e}"),
            });
        }
        alpha = rho_new / denom;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        let snorm = norm2(&s);
        if snorm <= target {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return Ok(finish(x, it, snorm));
        }
        let t = op.apply(&s);
        let tt = dot(&t, &t);
        if tt <= tiny {
            return Err(SpectralError::SolverBreakdown {
                iteration: it,
                reason: "A s vanished".into(),
            });
        }
        omega = dot(&t, &s) / tt;
        if omega.abs() <= tiny || !omega.is_finite() {
            return Err(SpectralError::SolverBreakdown {
                iteration: it,
                reason: format!("omega = {omega:e}"),
            });
        }
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        let rnorm = norm2(&r);
        if !rnorm.is_finite() {
            return Err(SpectralError::SolverBreakdown {
                iteration: it,
                reason: "residual is not finite".into(),
            });
        }
        if rnorm <= target {
            return Ok(finish(x, it, rnorm));
        }
    }
    let rr = norm2(&r);
    Err(SpectralError::SolverFailure {
        iterations: max_iter,
        residual: rr / bnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::AlmostBandedMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_takes_one_iteration() {
        let a = AlmostBandedMatrix::identity(10);
        let b: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let out = bicgstab_solve(&a, &b, 1e-14, 10).unwrap();
        assert_eq!(out.diagnostics.iterations, Some(1));
        assert_eq!(out.x, b);
    }

    #[test]
    fn converges_on_well_conditioned_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 200;
        let mut a = AlmostBandedMatrix::zeros(n, n, 2, 2, 1);
        for i in 0..n {
            for j in a.row_support(i).collect::<Vec<_>>() {
                let v = rng.random_range(-0.1..0.1) / if i == 0 { n as f64 } else { 1.0 };
                a.set(i, j, if i == j { 1.0 + v } else { v });
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let out = bicgstab_solve(&a, &b, 1e-14, 1000).unwrap();
        let bn = norm2(&b);
        let ax = a.matvec(&out.x);
        let true_res: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| q - p).collect();
        assert!(norm2(&true_res) <= 1e-13 * bn);
        // tracked and recomputed residuals agree
        assert!((norm2(&true_res) - out.recursive_residual).abs() <= 10.0 * f64::EPSILON * bn * n as f64);
    }

    #[test]
    fn failure_is_reported() {
        let mut a = AlmostBandedMatrix::zeros(50, 50, 1, 1, 0);
        for i in 0..50 {
            a.set(i, i, if i % 2 == 0 { 1.0 } else { -1e-3 });
            if i + 1 < 50 {
                a.set(i, i + 1, 1.0);
            }
        }
        let b = vec![1.0; 50];
        let r = bicgstab_solve(&a, &b, 1e-15, 2);
        assert!(matches!(
            r,
            Err(SpectralError::SolverFailure { .. }) | Err(SpectralError::SolverBreakdown { .. })
        ));
    }
}
