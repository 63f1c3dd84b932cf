use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef};

use crate::error::{Result, SpectralError};

fn check_square(a: MatRef<'_, f64>, b: &[f64]) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(SpectralError::InvalidArgument(format!(
            "system is {}x{} with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(SpectralError::InvalidArgument(format!(
                    "matrix entry ({i}, {j}) is not finite"
                )));
            }
        }
    }
    Ok(())
}

fn norm_inf(a: MatRef<'_, f64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn col(b: &[f64]) -> Mat<f64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

/// `‖A x - b‖_∞`.
pub fn residual_inf(a: MatRef<'_, f64>, x: &[f64], b: &[f64]) -> f64 {
    (0..a.nrows())
        .map(|i| {
            let s: f64 = (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum();
            (s - b[i]).abs()
        })
        .fold(0.0, f64::max)
}

/// Householder QR solve. Fails when some `|R_ii| <= eps ‖A‖_∞ n`.
pub fn dense_qr_solve(a: MatRef<'_, f64>, b: &[f64]) -> Result<Vec<f64>> {
    check_square(a, b)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let qr = a.qr();
    let r = qr.R();
    let threshold = f64::EPSILON * norm_inf(a) * n as f64;
    for i in 0..n {
        let piv = r[(i, i)];
        if !(piv.abs() > threshold) {
            return Err(SpectralError::SingularSystem {
                index: i,
                pivot: piv,
                threshold,
            });
        }
    }
    let x = qr.solve(col(b));
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}

/// LU solve with partial pivoting; same singularity test as
/// [`dense_qr_solve`] on the `U` diagonal.
pub fn dense_lu_solve(a: MatRef<'_, f64>, b: &[f64]) -> Result<Vec<f64>> {
    check_square(a, b)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let threshold = f64::EPSILON * norm_inf(a) * n as f64;
    for i in 0..n {
        let piv = u[(i, i)];
        if !(piv.abs() > threshold) {
            return Err(SpectralError::SingularSystem {
                index: i,
                pivot: piv,
                threshold,
            });
        }
    }
    let x = lu.solve(col(b));
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}
