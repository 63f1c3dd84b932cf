use std::fmt;

use crate::error::{Result, SpectralError};

/// Polynomial basis that indexes a coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// Chebyshev polynomials of the first kind `T_j`.
    ChebyshevT,
    /// Ultraspherical (Gegenbauer) polynomials `C_j^(k)` with integer `k >= 1`.
    Ultraspherical(usize),
}

impl Basis {
    /// Ultraspherical level: 0 for Chebyshev T, `k` for `C^(k)`.
    pub fn level(self) -> usize {
        match self {
            Basis::ChebyshevT => 0,
            Basis::Ultraspherical(k) => k,
        }
    }

    pub fn from_level(k: usize) -> Self {
        if k == 0 {
            Basis::ChebyshevT
        } else {
            Basis::Ultraspherical(k)
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::ChebyshevT => write!(f, "T"),
            Basis::Ultraspherical(k) => write!(f, "C^({k})"),
        }
    }
}

/// Coefficients `c_0, .., c_{n-1}` of a finite expansion in a tagged basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries {
    coeffs: Vec<f64>,
    basis: Basis,
}

impl ChebSeries {
    pub fn new(coeffs: Vec<f64>, basis: Basis) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(SpectralError::InvalidArgument(
                "a series needs at least one coefficient".into(),
            ));
        }
        if let Some(j) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(SpectralError::InvalidArgument(format!(
                "coefficient {j} is not finite"
            )));
        }
        if let Basis::Ultraspherical(0) = basis {
            return Err(SpectralError::InvalidArgument(
                "ultraspherical level must be positive".into(),
            ));
        }
        Ok(Self { coeffs, basis })
    }

    /// Chebyshev-T series.
    pub fn chebyshev(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(coeffs, Basis::ChebyshevT)
    }

    pub fn zero() -> Self {
        Self {
            coeffs: vec![0.0],
            basis: Basis::ChebyshevT,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            coeffs: vec![c],
            basis: Basis::ChebyshevT,
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Index of the last nonzero coefficient (0 for the zero series).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// Drops trailing exact zeros, keeping at least one coefficient.
    pub fn trimmed(&self) -> Self {
        let len = self.degree() + 1;
        Self {
            coeffs: self.coeffs[..len].to_vec(),
            basis: self.basis,
        }
    }

    /// Coefficients truncated or zero-padded to length `n`.
    pub fn padded(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        let k = n.min(self.coeffs.len());
        out[..k].copy_from_slice(&self.coeffs[..k]);
        out
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        clenshaw_eval(self, x)
    }

    pub fn eval_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| clenshaw_eval(self, x)).collect()
    }

    /// Chebyshev coefficients of the `k`-th derivative, by the standard
    /// backward recurrence `c'_{j-1} = c'_{j+1} + 2 j c_j`.
    pub fn derivative(&self, k: usize) -> Result<Self> {
        if self.basis != Basis::ChebyshevT {
            return Err(SpectralError::BasisMismatch(format!(
                "derivative recurrence needs a Chebyshev T series, got {}",
                self.basis
            )));
        }
        let mut c = self.coeffs.clone();
        for _ in 0..k {
            c = derivative_coeffs(&c);
        }
        Ok(Self {
            coeffs: c,
            basis: Basis::ChebyshevT,
        })
    }
}

pub(crate) fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for j in (1..n).rev() {
        d[j - 1] = d[j + 1] + 2.0 * j as f64 * c[j];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

/// Evaluates a series at `x` in `[-1, 1]` with the Clenshaw recurrence of
/// its basis.
pub fn clenshaw_eval(s: &ChebSeries, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(SpectralError::Domain { x });
    }
    let c = &s.coeffs;
    Ok(match s.basis {
        Basis::ChebyshevT => clenshaw_t(c, x),
        Basis::Ultraspherical(k) => clenshaw_ultra(c, k as f64, x),
    })
}

pub(crate) fn clenshaw_t(c: &[f64], x: f64) -> f64 {
    let n = c.len();
    if n == 0 {
        return 0.0;
    }
    let (mut b1, mut b2) = (0.0, 0.0);
    let two_x = 2.0 * x;
    for j in (1..n).rev() {
        let b0 = c[j] + two_x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + x * b1 - b2
}

// C_{j+1} = alpha_j C_j + beta_j C_{j-1},
// alpha_j = 2 (j + lam) x / (j + 1), beta_j = -(j + 2 lam - 1) / (j + 1).
fn clenshaw_ultra(c: &[f64], lam: f64, x: f64) -> f64 {
    let n = c.len();
    let alpha = |j: usize| 2.0 * (j as f64 + lam) * x / (j as f64 + 1.0);
    let beta = |j: usize| -(j as f64 + 2.0 * lam - 1.0) / (j as f64 + 1.0);
    let (mut b1, mut b2) = (0.0, 0.0);
    for j in (1..n).rev() {
        let b0 = c[j] + alpha(j) * b1 + beta(j + 1) * b2;
        b2 = b1;
        b1 = b0;
    }
    // phi_0 = 1, phi_1 = 2 lam x
    c[0] + 2.0 * lam * x * b1 + beta(1) * b2
}

/// Chebyshev coefficients of `x^j`, zero-padded to `len >= j + 1`.
pub fn monomial_coeffs(j: usize, len: usize) -> Vec<f64> {
    let len = len.max(j + 1);
    let mut cur = vec![0.0; len];
    cur[0] = 1.0;
    for _ in 0..j {
        // x T_k = (T_{k+1} + T_{|k-1|}) / 2
        let mut next = vec![0.0; len];
        for (k, &ck) in cur.iter().enumerate() {
            if ck == 0.0 {
                continue;
            }
            if k == 0 {
                next[1] += ck;
            } else {
                next[k + 1] += 0.5 * ck;
                next[k - 1] += 0.5 * ck;
            }
        }
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct_t(c: &[f64], x: f64) -> f64 {
        let th = x.acos();
        c.iter()
            .enumerate()
            .map(|(j, cj)| cj * (j as f64 * th).cos())
            .sum()
    }

    // C_0 = 1, C_1 = 2 lam x, (n+1) C_{n+1} = 2 (n + lam) x C_n - (n + 2 lam - 1) C_{n-1}
    fn direct_ultra(c: &[f64], lam: f64, x: f64) -> f64 {
        let mut vals = vec![1.0, 2.0 * lam * x];
        for n in 1..c.len() {
            let nf = n as f64;
            let v = (2.0 * (nf + lam) * x * vals[n] - (nf + 2.0 * lam - 1.0) * vals[n - 1])
                / (nf + 1.0);
            vals.push(v);
        }
        c.iter().zip(&vals).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn chebyshev_examples() {
        let s = ChebSeries::chebyshev(vec![0.0, 1.0]).unwrap();
        assert!((s.eval(0.3).unwrap() - 0.3).abs() < 1e-16);
        let s = ChebSeries::chebyshev(vec![1.0, 0.0, -1.0]).unwrap();
        assert_eq!(s.eval(1.0).unwrap(), 0.0);
    }

    #[test]
    fn ultraspherical_example() {
        // C_1^(1)(x) = 2x
        let s = ChebSeries::new(vec![0.0, 1.0], Basis::Ultraspherical(1)).unwrap();
        assert!((s.eval(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((direct_ultra(&[0.0, 1.0], 1.0, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domain_and_validation_errors() {
        let s = ChebSeries::constant(1.0);
        assert!(matches!(s.eval(1.5), Err(SpectralError::Domain { .. })));
        assert!(ChebSeries::chebyshev(vec![]).is_err());
        assert!(ChebSeries::chebyshev(vec![f64::NAN]).is_err());
    }

    #[test]
    fn monomials_match_listed_columns() {
        assert_eq!(monomial_coeffs(2, 3), vec![0.5, 0.0, 0.5]);
        assert_eq!(monomial_coeffs(3, 4), vec![0.0, 0.75, 0.0, 0.25]);
        assert_eq!(monomial_coeffs(4, 5), vec![0.375, 0.0, 0.5, 0.0, 0.125]);
    }

    #[test]
    fn derivative_of_t3() {
        // T_3 = 4x^3 - 3x, T_3' = 12x^2 - 3 = 3 T_0 + 6 T_2
        let s = ChebSeries::chebyshev(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let d = s.derivative(1).unwrap();
        assert_eq!(d.coeffs(), &[3.0, 0.0, 6.0]);
    }

    #[test]
    fn trimming_keeps_values() {
        let s = ChebSeries::chebyshev(vec![1.0, 2.0, 0.0, 0.0]).unwrap();
        let t = s.trimmed();
        assert_eq!(t.len(), 2);
        assert_eq!(s.eval(0.7).unwrap(), t.eval(0.7).unwrap());
        assert_eq!(ChebSeries::zero().trimmed().len(), 1);
    }

    proptest! {
        #[test]
        fn clenshaw_matches_direct_sum(
            c in proptest::collection::vec(-1.0f64..1.0, 1..60),
            x in -1.0f64..=1.0,
            k in 0usize..4,
        ) {
            let basis = Basis::from_level(k);
            let s = ChebSeries::new(c.clone(), basis).unwrap();
            let direct = if k == 0 { direct_t(&c, x) } else { direct_ultra(&c, k as f64, x) };
            let scale: f64 = if k == 0 {
                c.iter().map(|v| v.abs()).sum()
            } else {
                // |C_j^(k)| <= C_j^(k)(1) = binom(j + 2k - 1, j)
                let mut b = 1.0;
                let mut total = 0.0;
                for (j, cj) in c.iter().enumerate() {
                    if j > 0 { b *= (j as f64 + 2.0 * k as f64 - 1.0) / j as f64; }
                    total += cj.abs() * b;
                }
                total
            };
            let got = s.eval(x).unwrap();
            prop_assert!((got - direct).abs() <= 1e3 * f64::EPSILON * scale.max(1e-300));
        }
    }
}
