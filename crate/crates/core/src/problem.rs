//! Problem model: `u^(m) + Σ_k a^k u^(k) = f` on `[-1, 1]` with `m` linear
//! constraint functionals `B u = b`.

use std::fmt;

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::cheb::{integral_functional_row, monomial_coeffs, Basis, ChebSeries};
use crate::error::{Result, SpectralError};

/// A linear functional on Chebyshev coefficient sequences.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintFunctional {
    /// `u(x)`.
    Point { x: f64 },
    /// `u^(order)(x)`.
    Derivative { order: usize, x: f64 },
    /// `∫_{-1}^{1} u`.
    Integral,
    /// `Σ w_i F_i(u)`.
    Combination(Vec<(f64, ConstraintFunctional)>),
}

impl ConstraintFunctional {
    pub fn point(x: f64) -> Self {
        Self::Point { x }
    }

    pub fn dirichlet(x: f64) -> Self {
        Self::Point { x }
    }

    pub fn neumann(x: f64) -> Self {
        Self::Derivative { order: 1, x }
    }

    pub fn derivative(order: usize, x: f64) -> Self {
        if order == 0 {
            Self::Point { x }
        } else {
            Self::Derivative { order, x }
        }
    }

    pub fn integral() -> Self {
        Self::Integral
    }

    pub fn combination(terms: Vec<(f64, ConstraintFunctional)>) -> Self {
        Self::Combination(terms)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Point { x } | Self::Derivative { x, .. } => {
                if !(-1.0..=1.0).contains(x) {
                    return Err(SpectralError::Domain { x: *x });
                }
            }
            Self::Integral => {}
            Self::Combination(terms) => {
                if terms.is_empty() {
                    return Err(SpectralError::InvalidArgument(
                        "empty constraint combination".into(),
                    ));
                }
                for (w, f) in terms {
                    if !w.is_finite() {
                        return Err(SpectralError::InvalidArgument(format!(
                            "constraint weight {w} is not finite"
                        )));
                    }
                    f.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Coefficient-space row of length `n`: entry `j` is the functional
    /// applied to `T_j`.
    pub fn row(&self, n: usize) -> Vec<f64> {
        match self {
            Self::Point { x } => derivative_row(0, *x, n),
            Self::Derivative { order, x } => derivative_row(*order, *x, n),
            Self::Integral => integral_functional_row(n),
            Self::Combination(terms) => {
                let mut out = vec![0.0; n];
                for (w, f) in terms {
                    for (o, v) in out.iter_mut().zip(f.row(n)) {
                        *o += w * v;
                    }
                }
                out
            }
        }
    }

    /// The functional applied to a coefficient vector.
    pub fn apply(&self, coeffs: &[f64]) -> f64 {
        self.row(coeffs.len())
            .iter()
            .zip(coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }
}

impl fmt::Display for ConstraintFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Point { x } => write!(f, "dirichlet({x})"),
            Self::Derivative { order: 1, x } => write!(f, "neumann({x})"),
            Self::Derivative { order, x } => write!(f, "deriv({order}, {x})"),
            Self::Integral => write!(f, "integral"),
            Self::Combination(terms) => {
                for (i, (w, t)) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{w}*{t}")?;
                }
                Ok(())
            }
        }
    }
}

/// Shorthand for [`ConstraintFunctional::row`].
pub fn constraint_row(functional: &ConstraintFunctional, n: usize) -> Vec<f64> {
    functional.row(n)
}

/// Row `T_j^(q)(x)` for `j < n`, using `T_j^(q) = 2^{q-1} (q-1)! j C^(q)_{j-q}`
/// and the three-term recurrence of `C^(q)`.
fn derivative_row(q: usize, x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if q == 0 {
        let (mut t0, mut t1) = (1.0, x);
        for (j, o) in out.iter_mut().enumerate() {
            *o = match j {
                0 => 1.0,
                1 => x,
                _ => {
                    let t2 = 2.0 * x * t1 - t0;
                    t0 = t1;
                    t1 = t2;
                    t2
                }
            };
        }
        return out;
    }
    let lam = q as f64;
    let scale = crate::operators::diff_scale(q);
    let (mut c0, mut c1) = (1.0, 2.0 * lam * x);
    for j in q..n {
        let k = j - q;
        let ck = match k {
            0 => 1.0,
            1 => c1,
            _ => {
                let kf = (k - 1) as f64;
                let c2 = (2.0 * (kf + lam) * x * c1 - (kf + 2.0 * lam - 1.0) * c0) / (kf + 1.0);
                c0 = c1;
                c1 = c2;
                c2
            }
        };
        out[j] = scale * j as f64 * ck;
    }
    out
}

/// The `m` constraint functionals of a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    functionals: Vec<ConstraintFunctional>,
}

impl ConstraintSet {
    pub fn new(functionals: Vec<ConstraintFunctional>) -> Self {
        Self { functionals }
    }

    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }

    pub fn functionals(&self) -> &[ConstraintFunctional] {
        &self.functionals
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ConstraintFunctional> {
        self.functionals.iter()
    }

    /// `m x n` coefficient-space matrix.
    pub fn rows(&self, n: usize) -> Vec<Vec<f64>> {
        self.functionals.iter().map(|f| f.row(n)).collect()
    }

    /// Applies every functional to a coefficient vector.
    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        self.functionals.iter().map(|f| f.apply(coeffs)).collect()
    }

    /// `B X` and its inverse, where column `j` of `X` is `x^j`, `j < m`.
    /// Fails with ill-posed-constraints when `B X` is numerically singular.
    pub fn monomial_gram(&self) -> Result<ConstraintGram> {
        let m = self.len();
        let bx = Mat::from_fn(m, m, |i, j| self.functionals[i].apply(&monomial_coeffs(j, m)));
        let sv = bx
            .singular_values()
            .map_err(|e| SpectralError::Internal(format!("SVD failed: {e:?}")))?;
        let cond = if sv[m - 1] == 0.0 {
            f64::INFINITY
        } else {
            sv[0] / sv[m - 1]
        };
        if !(cond < 1e13) {
            return Err(SpectralError::IllPosedConstraints { cond });
        }
        let inverse = bx.partial_piv_lu().solve(Mat::<f64>::identity(m, m));
        Ok(ConstraintGram { bx, inverse, cond })
    }
}

/// The `m x m` matrix `B X` of constraints applied to monomials.
#[derive(Debug, Clone)]
pub struct ConstraintGram {
    pub bx: Mat<f64>,
    pub inverse: Mat<f64>,
    pub cond: f64,
}

impl ConstraintGram {
    /// `(B X)^{-1} y`.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let m = y.len();
        (0..m)
            .map(|i| (0..m).map(|j| self.inverse[(i, j)] * y[j]).sum())
            .collect()
    }
}

/// `u^(m) + Σ_{k<m} a^k(x) u^(k) = f(x)`, `B u = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeProblem {
    coeffs: Vec<ChebSeries>,
    rhs: ChebSeries,
    constraints: ConstraintSet,
    targets: Vec<f64>,
}

impl OdeProblem {
    /// `coeffs[k]` multiplies `u^(k)`; the order is `coeffs.len()`.
    pub fn new(
        coeffs: Vec<ChebSeries>,
        rhs: ChebSeries,
        constraints: ConstraintSet,
        targets: Vec<f64>,
    ) -> Result<Self> {
        let m = coeffs.len();
        if m == 0 {
            return Err(SpectralError::InvalidArgument(
                "the differential order must be at least 1".into(),
            ));
        }
        if constraints.len() != m {
            return Err(SpectralError::InvalidArgument(format!(
                "order {m} needs {m} constraints, got {}",
                constraints.len()
            )));
        }
        if targets.len() != m {
            return Err(SpectralError::InvalidArgument(format!(
                "order {m} needs {m} constraint values, got {}",
                targets.len()
            )));
        }
        for (k, a) in coeffs.iter().enumerate() {
            if a.basis() != Basis::ChebyshevT {
                return Err(SpectralError::BasisMismatch(format!(
                    "coefficient a{k} must be a Chebyshev T series"
                )));
            }
        }
        if rhs.basis() != Basis::ChebyshevT {
            return Err(SpectralError::BasisMismatch(
                "right-hand side must be a Chebyshev T series".into(),
            ));
        }
        if let Some(b) = targets.iter().find(|b| !b.is_finite()) {
            return Err(SpectralError::InvalidArgument(format!(
                "constraint value {b} is not finite"
            )));
        }
        for f in constraints.iter() {
            f.validate()?;
        }
        Ok(Self {
            coeffs: coeffs.into_iter().map(|a| a.trimmed()).collect(),
            rhs: rhs.trimmed(),
            constraints,
            targets,
        })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// `a^k`.
    pub fn coeff(&self, k: usize) -> &ChebSeries {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[ChebSeries] {
        &self.coeffs
    }

    pub fn rhs(&self) -> &ChebSeries {
        &self.rhs
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Largest degree among the variable coefficients.
    pub fn max_coeff_degree(&self) -> usize {
        self.coeffs.iter().map(|a| a.degree()).max().unwrap_or(0)
    }

    /// Same operator and constraints with another right-hand side.
    pub fn with_rhs(&self, rhs: ChebSeries, targets: Vec<f64>) -> Result<Self> {
        Self::new(self.coeffs.clone(), rhs, self.constraints.clone(), targets)
    }

    /// Residual `u^(m) + Σ a^k u^(k) - f` of a candidate solution, as a
    /// Chebyshev series.
    pub fn residual_series(&self, u: &ChebSeries) -> Result<ChebSeries> {
        let m = self.order();
        let len = u.len() + self.max_coeff_degree() + self.rhs.len();
        let mut acc = u.derivative(m)?.padded(len);
        for (k, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let prod = crate::operators::multiply_series(a, &u.derivative(k)?)?;
            for (o, v) in acc.iter_mut().zip(prod.coeffs()) {
                *o += v;
            }
        }
        for (o, v) in acc.iter_mut().zip(self.rhs.coeffs()) {
            *o -= v;
        }
        ChebSeries::chebyshev(acc)
    }
}
