use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::error::{Result, SpectralError};

/// Above this size [`cond2_estimate`] switches from a full SVD to Lanczos.
pub const LANCZOS_THRESHOLD: usize = 2048;
/// Largest matrix [`cond2_estimate`] will materialize.
pub const COND_BUDGET: usize = 8192;

/// `σ_max / σ_min` of a square matrix; `+inf` when singular.
///
/// Full SVD for `n <= 2048`; Lanczos on `AᵀA` and `(AᵀA)^{-1}` (via an LU
/// factorization) above, which resolves both extreme singular values well
/// beyond four significant digits.
pub fn cond2_estimate(a: MatRef<'_, f64>) -> Result<f64> {
    let n = a.nrows();
    if n > COND_BUDGET {
        return Err(SpectralError::Budget {
            n,
            limit: COND_BUDGET,
        });
    }
    if n <= LANCZOS_THRESHOLD {
        cond2_svd(a)
    } else {
        cond2_lanczos(a)
    }
}

pub fn cond2_svd(a: MatRef<'_, f64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(SpectralError::InvalidArgument("empty matrix".into()));
    }
    let s = a
        .singular_values()
        .map_err(|e| SpectralError::Internal(format!("SVD failed: {e:?}")))?;
    let smax = s[0];
    let smin = *s.last().expect("nonempty");
    if smin == 0.0 || !(smax / smin).is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

pub fn cond2_lanczos(a: MatRef<'_, f64>) -> Result<f64> {
    let n = a.nrows();
    if n != a.ncols() || n == 0 {
        return Err(SpectralError::InvalidArgument(
            "condition number needs a nonempty square matrix".into(),
        ));
    }
    let at = a.transpose();
    let normal = |x: &[f64]| -> Vec<f64> {
        let xm = Mat::from_fn(n, 1, |i, _| x[i]);
        let y = &at * (a * &xm);
        (0..n).map(|i| y[(i, 0)]).collect()
    };
    let lmax = lanczos_max(normal, n)?;
    let lu = a.partial_piv_lu();
    let u = lu.U();
    if (0..n).any(|i| u[(i, i)] == 0.0) {
        return Ok(f64::INFINITY);
    }
    let inverse_normal = |x: &[f64]| -> Vec<f64> {
        // (AᵀA)^{-1} x = A^{-1} A^{-T} x
        let xm = Mat::from_fn(n, 1, |i, _| x[i]);
        let z = lu.solve_transpose(&xm);
        let w = lu.solve(&z);
        (0..n).map(|i| w[(i, 0)]).collect()
    };
    let linv = lanczos_max(inverse_normal, n)?;
    let c = (lmax * linv).sqrt();
    if c.is_finite() {
        Ok(c)
    } else {
        Ok(f64::INFINITY)
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite operator by
/// Lanczos with full reorthogonalization.
fn lanczos_max(mut apply: impl FnMut(&[f64]) -> Vec<f64>, n: usize) -> Result<f64> {
    let max_k = n.min(300);
    // deterministic, non-degenerate start vector
    let mut q: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * (1.7 * i as f64 + 0.3).sin())
        .collect();
    normalize(&mut q);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev = f64::NAN;
    let mut stable = 0;
    for k in 0..max_k {
        let mut w = apply(&q);
        let a = dot(&w, &q);
        alpha.push(a);
        basis.push(q.clone());
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
            }
        }
        let b = norm(&w);
        let theta = tridiagonal_max(&alpha, &beta)?;
        if (theta - prev).abs() <= 1e-12 * theta.abs() {
            stable += 1;
            if stable >= 2 {
                return Ok(theta);
            }
        } else {
            stable = 0;
        }
        prev = theta;
        if b <= 1e-14 * theta.abs().max(f64::MIN_POSITIVE) || k + 1 == max_k {
            return Ok(theta);
        }
        beta.push(b);
        q = w.into_iter().map(|v| v / b).collect();
    }
    Ok(prev)
}

fn tridiagonal_max(alpha: &[f64], beta: &[f64]) -> Result<f64> {
    let k = alpha.len();
    let t = Mat::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let ev = t
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| SpectralError::Internal(format!("eigenvalue solver failed: {e:?}")))?;
    Ok(ev.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let s = norm(a);
    a.iter_mut().for_each(|v| *v /= s);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
        let g = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        g.qr().compute_Q()
    }

    #[test]
    fn simple_cases() {
        assert!((cond2_estimate(Mat::<f64>::identity(5, 5).as_ref()).unwrap() - 1.0).abs() < 1e-14);
        let mut d = Mat::<f64>::zeros(2, 2);
        d[(0, 0)] = 1.0;
        d[(1, 1)] = 10.0;
        assert!((cond2_estimate(d.as_ref()).unwrap() - 10.0).abs() < 1e-13);
        let z = Mat::<f64>::zeros(3, 3);
        assert_eq!(cond2_estimate(z.as_ref()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn known_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 120;
        let u = orthogonal(n, &mut rng);
        let v = orthogonal(n, &mut rng);
        let s = Mat::from_fn(n, n, |i, j| if i == j { 1.0 + 0.05 * i as f64 } else { 0.0 });
        let a = &(&u * &s) * v.transpose();
        let exact = 1.0 + 0.05 * (n - 1) as f64;
        let c1 = cond2_svd(a.as_ref()).unwrap();
        let c2 = cond2_lanczos(a.as_ref()).unwrap();
        assert!((c1 - exact).abs() < 1e-4 * exact);
        assert!((c2 - exact).abs() < 1e-4 * exact, "lanczos {c2} vs {exact}");
    }
}
