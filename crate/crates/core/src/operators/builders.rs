use super::{AlmostBandedMatrix, OperatorTruncation};
use crate::cheb::{Basis, ChebSeries};
use crate::error::{Result, SpectralError};

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(SpectralError::InvalidTruncation {
            n: rows.min(cols),
            reason: "truncations need at least one row and one column".into(),
        });
    }
    Ok(())
}

/// `2^{k-1} (k-1)!`
pub fn diff_scale(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut s = 2f64.powi(k as i32 - 1);
    for i in 2..k {
        s *= i as f64;
    }
    s
}

/// Square `n x n` section of `D_k`: maps Chebyshev-T coefficients to
/// `C^(k)` coefficients of the `k`-th derivative.
pub fn diff_op(k: usize, n: usize) -> Result<OperatorTruncation> {
    if k == 0 {
        return Err(SpectralError::InvalidArgument(
            "differentiation order must be at least 1".into(),
        ));
    }
    if n <= k {
        return Err(SpectralError::InvalidTruncation {
            n,
            reason: format!("D_{k} needs n >= {}", k + 1),
        });
    }
    diff_op_rect(k, n, n)
}

/// `rows x cols` section of `D_k`; `k = 0` gives the identity section.
pub fn diff_op_rect(k: usize, rows: usize, cols: usize) -> Result<OperatorTruncation> {
    check_dims(rows, cols)?;
    let mut m = AlmostBandedMatrix::zeros(rows, cols, 0, k, 0);
    let s = diff_scale(k);
    for i in 0..rows {
        let j = i + k;
        if j < cols {
            m.set(i, j, if k == 0 { 1.0 } else { s * j as f64 });
        }
    }
    Ok(OperatorTruncation::new(m, Basis::from_level(k), Basis::ChebyshevT))
}

/// Square `n x n` section of the conversion `S_k: C^(k) -> C^(k+1)`
/// (`S_0` converts Chebyshev-T to `C^(1)`).
pub fn conv_op(k: usize, n: usize) -> Result<OperatorTruncation> {
    if n < 3 {
        return Err(SpectralError::InvalidTruncation {
            n,
            reason: "conversion operators need n >= 3".into(),
        });
    }
    conv_op_rect(k, n, n)
}

pub fn conv_op_rect(k: usize, rows: usize, cols: usize) -> Result<OperatorTruncation> {
    check_dims(rows, cols)?;
    let mut m = AlmostBandedMatrix::zeros(rows, cols, 0, 2, 0);
    let kf = k as f64;
    for j in 0..rows {
        let (diag, sup) = if k == 0 {
            (if j == 0 { 1.0 } else { 0.5 }, -0.5)
        } else {
            let jf = j as f64;
            (kf / (kf + jf), -kf / (kf + jf + 2.0))
        };
        if j < cols {
            m.set(j, j, diag);
        }
        if j + 2 < cols {
            m.set(j, j + 2, sup);
        }
    }
    Ok(OperatorTruncation::new(
        m,
        Basis::from_level(k + 1),
        Basis::from_level(k),
    ))
}

/// Exact `rows x cols` section of `S_{to-1} ... S_from`, mapping `C^(from)`
/// to `C^(to)` coefficients. Returns the identity section when `from == to`.
pub fn conv_chain(from: usize, to: usize, rows: usize, cols: usize) -> Result<OperatorTruncation> {
    check_dims(rows, cols)?;
    if from > to {
        return Err(SpectralError::InvalidArgument(format!(
            "conversion chain from level {from} down to {to}"
        )));
    }
    if from == to {
        let mut m = AlmostBandedMatrix::zeros(rows, cols, 0, 0, 0);
        for i in 0..rows.min(cols) {
            m.set(i, i, 1.0);
        }
        let b = Basis::from_level(from);
        return Ok(OperatorTruncation::new(m, b, b));
    }
    // S factors are upper triangular, so each needs two more columns than
    // rows for the product to be exact.
    let mut acc: Option<OperatorTruncation> = None;
    let mut r = rows;
    for level in (from..to).rev() {
        let c = if level == from { cols } else { r + 2 };
        let s = conv_op_rect(level, r, c)?;
        acc = Some(match acc {
            None => s,
            Some(a) => a.compose(&s)?,
        });
        r = c;
    }
    Ok(acc.expect("at least one factor"))
}

fn check_cheb(a: &ChebSeries) -> Result<()> {
    if a.basis() != Basis::ChebyshevT {
        return Err(SpectralError::BasisMismatch(format!(
            "multiplication operators take a Chebyshev T coefficient function, got {}",
            a.basis()
        )));
    }
    Ok(())
}

/// Square section of `M_0[a]`, multiplication by `a(x)` on Chebyshev-T
/// coefficients.
pub fn mult_op_cheb(a: &ChebSeries, n: usize) -> Result<OperatorTruncation> {
    mult_op_cheb_rect(a, n, n)
}

/// `rows x cols` section of `M_0[a] = ½ Toeplitz(2a_0, a_1, ..) + ½ H`, where
/// `H(i, j) = a_{i+j}` for `i >= 1` and row 0 of `H` is zero.
pub fn mult_op_cheb_rect(a: &ChebSeries, rows: usize, cols: usize) -> Result<OperatorTruncation> {
    check_cheb(a)?;
    check_dims(rows, cols)?;
    let c = a.coeffs();
    let d = a.degree();
    let mut m = AlmostBandedMatrix::zeros(rows, cols, d, d, 0);
    for i in 0..rows {
        let lo = i.saturating_sub(d);
        let hi = (i + d + 1).min(cols);
        for j in lo..hi {
            let k = i.abs_diff(j);
            let mut v = if k == 0 { c[0] } else { 0.5 * c[k] };
            if i >= 1 && i + j <= d {
                v += 0.5 * c[i + j];
            }
            if v != 0.0 {
                m.set(i, j, v);
            }
        }
    }
    Ok(OperatorTruncation::new(m, Basis::ChebyshevT, Basis::ChebyshevT))
}

/// Square section of `M_k[a]` on `C^(k)` coefficients.
pub fn mult_op_ultra(a: &ChebSeries, k: usize, n: usize) -> Result<OperatorTruncation> {
    mult_op_ultra_rect(a, k, n, n)
}

/// `rows x cols` section of `M_k[a] = U M_0[a] U^{-1}`, `U = S_{k-1} ... S_0`.
///
/// `P_rows U M_0 U^{-1} P_cols^T` equals `(P_rows U M_0 P_cols^T)
/// (P_cols U P_cols^T)^{-1}` because `U` is upper triangular; the right
/// factor is applied by forward substitution row by row. Only the band of
/// width `deg a` is computed, which is where the exact result lives.
pub fn mult_op_ultra_rect(
    a: &ChebSeries,
    k: usize,
    rows: usize,
    cols: usize,
) -> Result<OperatorTruncation> {
    if k == 0 {
        return mult_op_cheb_rect(a, rows, cols);
    }
    check_cheb(a)?;
    check_dims(rows, cols)?;
    let d = a.degree();
    let p = cols.max(rows) + 2 * k;
    let m0 = mult_op_cheb_rect(a, p, cols)?;
    let y = conv_chain(0, k, rows, p)?.compose(&m0)?.matrix;
    let u = conv_chain(0, k, cols, cols)?.matrix;
    let mut out = AlmostBandedMatrix::zeros(rows, cols, d, d, 0);
    let mut x = vec![0.0; cols];
    for i in 0..rows {
        let lo = i.saturating_sub(d);
        let hi = (i + d + 1).min(cols);
        for j in lo..hi {
            let mut s = y.get(i, j);
            for l in j.saturating_sub(2 * k).max(lo)..j {
                s -= x[l] * u.get(l, j);
            }
            let piv = u.get(j, j);
            if piv == 0.0 {
                return Err(SpectralError::Internal(format!(
                    "zero diagonal in conversion chain at {j}"
                )));
            }
            x[j] = s / piv;
        }
        for j in lo..hi {
            if x[j] != 0.0 {
                out.set(i, j, x[j]);
            }
        }
    }
    let b = Basis::from_level(k);
    Ok(OperatorTruncation::new(out, b, b))
}

/// Square `n x n` section of the integration operator `Q`
/// (`Qv` are the coefficients of `∫_{-1}^x v`).
pub fn integration_op(n: usize) -> Result<OperatorTruncation> {
    if n < 3 {
        return Err(SpectralError::InvalidTruncation {
            n,
            reason: "the integration operator needs n >= 3".into(),
        });
    }
    integration_op_rect(n, n)
}

/// `rows x cols` section of `Q`: one dense row plus a tridiagonal band.
pub fn integration_op_rect(rows: usize, cols: usize) -> Result<OperatorTruncation> {
    check_dims(rows, cols)?;
    let mut m = AlmostBandedMatrix::zeros(rows, cols, 1, 1, 1);
    let mut put = |i: usize, j: usize, v: f64| {
        if i < rows && j < cols {
            m.add_to(i, j, v);
        }
    };
    // column 0: x + 1
    put(0, 0, 1.0);
    put(1, 0, 1.0);
    // column 1: (x^2 - 1) / 2 = T_2 / 4 - 1 / 4
    put(0, 1, -0.25);
    put(2, 1, 0.25);
    for j in 2..cols {
        let jf = j as f64;
        put(j + 1, j, 1.0 / (2.0 * (jf + 1.0)));
        put(j - 1, j, -1.0 / (2.0 * (jf - 1.0)));
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        put(0, j, sign / ((jf - 1.0) * (jf + 1.0)));
    }
    Ok(OperatorTruncation::new(m, Basis::ChebyshevT, Basis::ChebyshevT))
}

/// Exact `rows x cols` section of `Q^p`.
pub fn integration_power(p: usize, rows: usize, cols: usize) -> Result<OperatorTruncation> {
    check_dims(rows, cols)?;
    if p == 0 {
        return conv_chain(0, 0, rows, cols);
    }
    let mut acc = integration_op_rect(cols + 1, cols)?;
    for i in 2..=p {
        let r = if i == p { rows.max(cols + p) } else { cols + i };
        let q = integration_op_rect(r, cols + i - 1)?;
        acc = q.compose(&acc)?;
    }
    if p == 1 && rows > cols + 1 {
        acc = integration_op_rect(rows, cols)?;
    }
    Ok(acc.crop(rows, cols))
}

/// Chebyshev coefficients of the product `a(x) b(x)` (exact length
/// `len(a) + len(b) - 1`).
pub fn multiply_series(a: &ChebSeries, b: &ChebSeries) -> Result<ChebSeries> {
    check_cheb(b)?;
    let rows = a.len() + b.len() - 1;
    let m = mult_op_cheb_rect(a, rows, b.len())?;
    ChebSeries::chebyshev(m.apply(b.coeffs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::clenshaw_eval;
    use faer::Mat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = f64::EPSILON;

    fn series(c: &[f64]) -> ChebSeries {
        ChebSeries::chebyshev(c.to_vec()).unwrap()
    }

    fn block_diff(a: &Mat<f64>, b: &Mat<f64>, n: usize, m: usize) -> f64 {
        (0..n)
            .map(|i| (0..m).map(|j| (a[(i, j)] - b[(i, j)]).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    #[test]
    fn differentiation_entries() {
        let d1 = diff_op(1, 5).unwrap();
        assert_eq!(d1.get(0, 1), 1.0);
        assert_eq!(d1.get(1, 2), 2.0);
        assert_eq!(d1.get(2, 3), 3.0);
        assert_eq!(diff_op(2, 5).unwrap().get(0, 2), 4.0);
        assert_eq!(diff_op(3, 6).unwrap().get(0, 3), 8.0 * 3.0 / 2.0 * 2.0);
        // T_3' = 3 C_2^(1)
        let y = d1.apply(&[0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(&y[..3], &[0.0, 0.0, 3.0]);
        assert!(diff_op(2, 2).is_err());
        assert_eq!(d1.row_basis, Basis::Ultraspherical(1));
    }

    #[test]
    fn conversion_entries() {
        let s0 = conv_op(0, 6).unwrap();
        assert_eq!(s0.get(0, 2), -0.5);
        assert_eq!(s0.get(1, 1), 0.5);
        assert_eq!(s0.get(0, 0), 1.0);
        assert_eq!(s0.apply(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0])[..3], [1.0, 0.0, 0.0]);
        let s1 = conv_op(1, 6).unwrap();
        assert_eq!(s1.get(1, 1), 0.5);
        assert!((s1.get(0, 2) + 1.0 / 3.0).abs() < 1e-16);
        assert!((s1.get(2, 2) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn conversion_preserves_values() {
        // S_k maps C^(k) coefficients of a function to C^(k+1) coefficients of
        // the same function.
        let c = [0.3, -1.0, 0.25, 0.5, -0.125, 0.7];
        for k in 0..3 {
            let from = ChebSeries::new(c.to_vec(), Basis::from_level(k)).unwrap();
            // pad so that the section is exact
            let pad: Vec<f64> = c.iter().copied().chain([0.0, 0.0]).collect();
            let y = conv_op_rect(k, 8, 8).unwrap().apply(&pad);
            let to = ChebSeries::new(y, Basis::from_level(k + 1)).unwrap();
            for x in [-0.9, -0.1, 0.4, 0.99] {
                let (p, q) = (from.eval(x).unwrap(), to.eval(x).unwrap());
                assert!((p - q).abs() < 1e-14 * p.abs().max(1.0), "k={k} x={x} {p} {q}");
            }
        }
    }

    #[test]
    fn multiplication_examples() {
        let id = mult_op_cheb(&series(&[1.0]), 5).unwrap();
        assert_eq!(id.matrix.to_dense(), AlmostBandedMatrix::identity(5).to_dense());
        let mx = mult_op_cheb(&series(&[0.0, 1.0]), 5).unwrap();
        assert_eq!(mx.get(0, 0), 0.0);
        assert_eq!(mx.get(1, 0), 1.0);
        assert_eq!(mx.get(1, 2), 0.5);
        assert_eq!(mx.get(0, 1), 0.5);
        assert!(mult_op_cheb(&ChebSeries::new(vec![1.0], Basis::Ultraspherical(1)).unwrap(), 4).is_err());
    }

    #[test]
    fn multiplication_matches_product_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut prod = vec![0.0; 11];
            for (i, ai) in a.iter().enumerate() {
                for (j, bj) in b.iter().enumerate() {
                    prod[i + j] += 0.5 * ai * bj;
                    prod[i.abs_diff(j)] += 0.5 * ai * bj;
                }
            }
            let got = multiply_series(&series(&a), &series(&b)).unwrap();
            for (p, q) in got.coeffs().iter().zip(&prod) {
                assert!((p - q).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn product_of_multiplications() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        for _ in 0..10 {
            let a = series(&(0..4).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
            let b = series(&(0..6).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
            let ab = multiply_series(&a, &b).unwrap();
            let lhs = &mult_op_cheb(&a, n).unwrap().matrix.to_dense()
                * &mult_op_cheb(&b, n).unwrap().matrix.to_dense();
            let rhs = mult_op_cheb(&ab, n).unwrap().matrix.to_dense();
            let k = n - 3 - 5;
            assert!(block_diff(&lhs, &rhs, k, k) < 1e3 * EPS);
        }
    }

    #[test]
    fn ultraspherical_multiplication() {
        let id = mult_op_ultra(&series(&[1.0]), 2, 6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id.get(i, j) - e).abs() < 1e-15);
            }
        }
        let mx = mult_op_ultra(&series(&[0.0, 1.0]), 1, 6).unwrap();
        assert!(mx.get(0, 0).abs() < 1e-16);
        assert!((mx.get(1, 0) - 0.5).abs() < 1e-16);
        assert!(mx.get(2, 0).abs() < 1e-16);
    }

    #[test]
    fn conjugation_identity() {
        // M_k[a] S_{k-1}..S_0 = S_{k-1}..S_0 M_0[a]
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 1..=3 {
            for _ in 0..5 {
                let a = series(&(0..6).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
                let n = 60;
                let p = n + 2 * k + 6;
                let lhs = mult_op_ultra_rect(&a, k, n, p)
                    .unwrap()
                    .compose(&conv_chain(0, k, p, p).unwrap())
                    .unwrap();
                let rhs = conv_chain(0, k, n, p + 6)
                    .unwrap()
                    .compose(&mult_op_cheb_rect(&a, p + 6, p).unwrap())
                    .unwrap();
                let m = n - 2 * k - 6;
                let err = block_diff(&lhs.matrix.to_dense(), &rhs.matrix.to_dense(), m, m);
                assert!(err <= 1e3 * EPS * a.l1_norm(), "k={k} err={err}");
            }
        }
    }

    #[test]
    fn integration_entries() {
        let q = integration_op(6).unwrap();
        let row0 = [1.0, -0.25, -1.0 / 3.0, 1.0 / 8.0, -1.0 / 15.0];
        for (j, v) in row0.iter().enumerate() {
            assert!((q.get(0, j) - v).abs() < 1e-16);
        }
        assert_eq!(q.get(1, 0), 1.0);
        assert_eq!(q.get(1, 2), -0.5);
        assert_eq!(q.get(2, 1), 0.25);
        assert!((q.get(3, 2) - 1.0 / 6.0).abs() < 1e-16);
        let y = q.apply(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(&y[..3], &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn integration_columns_vanish_at_minus_one() {
        let n = 200;
        let q = integration_op_rect(n + 1, n).unwrap().matrix.to_dense();
        for j in 0..n {
            let col: Vec<f64> = (0..=n).map(|i| q[(i, j)]).collect();
            let norm: f64 = col.iter().map(|v| v.abs()).sum();
            let v = clenshaw_eval(&series(&col), -1.0).unwrap();
            assert!(v.abs() <= 1e2 * EPS * norm, "column {j}");
        }
    }

    #[test]
    fn differentiation_inverts_integration() {
        // D_k Q^k = S_{k-1}..S_0 on the leading block
        for k in 1..=3 {
            for n in [16usize, 64, 256] {
                let lhs = diff_op_rect(k, n, n + k)
                    .unwrap()
                    .compose(&integration_power(k, n + k, n).unwrap())
                    .unwrap();
                let rhs = conv_chain(0, k, n, n).unwrap();
                let m = n - k;
                let err = block_diff(&lhs.matrix.to_dense(), &rhs.matrix.to_dense(), m, m);
                assert!(err <= 1e2 * EPS, "k={k} n={n} err={err}");
                // square-section composition as well
                let sq = diff_op(k, n).unwrap().compose(&{
                    let mut q = integration_op(n).unwrap();
                    for _ in 1..k {
                        q = integration_op(n).unwrap().compose(&q).unwrap();
                    }
                    q
                });
                let sq = sq.unwrap();
                let m = n - 2 * k;
                let err = block_diff(&sq.matrix.to_dense(), &rhs.matrix.to_dense(), m, m);
                assert!(err <= 1e2 * EPS, "square k={k} n={n} err={err}");
            }
        }
    }

    #[test]
    fn compose_rejects_basis_mismatch() {
        let d = diff_op(1, 5).unwrap();
        assert!(matches!(d.compose(&d), Err(SpectralError::BasisMismatch(_))));
        let i = OperatorTruncation::identity(5, Basis::Ultraspherical(1));
        let c = i.compose(&d).unwrap();
        assert_eq!(c.matrix.to_dense(), d.matrix.to_dense());
    }
}
