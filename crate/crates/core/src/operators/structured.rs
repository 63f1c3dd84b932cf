use std::sync::Arc;

use faer::Mat;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{AlmostBandedMatrix, OperatorTruncation};
use crate::cheb::ChebSeries;
use crate::error::{Result, SpectralError};

/// A linear map given only through its action on vectors.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`; `y` is overwritten.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinearOperator for AlmostBandedMatrix {
    fn nrows(&self) -> usize {
        AlmostBandedMatrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        AlmostBandedMatrix::ncols(self)
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y)
    }
}

impl LinearOperator for OperatorTruncation {
    fn nrows(&self) -> usize {
        self.matrix.nrows()
    }
    fn ncols(&self) -> usize {
        self.matrix.ncols()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.matvec_into(x, y)
    }
}

impl LinearOperator for Mat<f64> {
    fn nrows(&self) -> usize {
        Mat::nrows(self)
    }
    fn ncols(&self) -> usize {
        Mat::ncols(self)
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), Mat::ncols(self));
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..Mat::ncols(self) {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let col = self.col(j);
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += col[i] * xj;
            }
        }
    }
}

/// Toeplitz matrix applied through circulant embedding and FFTs.
#[derive(Clone)]
pub struct Toeplitz {
    nrows: usize,
    ncols: usize,
    spectrum: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Toeplitz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Toeplitz")
            .field("nrows", &self.nrows)
            .field("ncols", &self.ncols)
            .finish()
    }
}

impl Toeplitz {
    /// `T(i, j) = col[i - j]` for `i >= j` and `row[j - i]` otherwise. Missing
    /// trailing entries of `col` / `row` are zero; `row[0]` is ignored.
    pub fn new(nrows: usize, ncols: usize, col: &[f64], row: &[f64]) -> Result<Self> {
        if nrows == 0 || ncols == 0 {
            return Err(SpectralError::InvalidArgument(
                "Toeplitz operator needs positive dimensions".into(),
            ));
        }
        let len = (nrows + ncols - 1).next_power_of_two();
        let mut g = vec![Complex64::new(0.0, 0.0); len];
        for (i, &c) in col.iter().take(nrows).enumerate() {
            g[i].re = c;
        }
        for (k, &r) in row.iter().enumerate().take(ncols).skip(1) {
            g[len - k].re = r;
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        fwd.process(&mut g);
        let scale = 1.0 / len as f64;
        g.iter_mut().for_each(|z| *z *= scale);
        Ok(Self {
            nrows,
            ncols,
            spectrum: g,
            fwd,
            inv,
        })
    }
}

impl LinearOperator for Toeplitz {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.spectrum.len()];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.fwd.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inv.process(&mut buf);
        for (yi, b) in y.iter_mut().zip(&buf) {
            *yi = b.re;
        }
    }
}

/// Hankel matrix `H(i, j) = h[i + j]`, applied as a Toeplitz product on the
/// reversed input.
#[derive(Debug, Clone)]
pub struct Hankel {
    inner: Toeplitz,
}

impl Hankel {
    pub fn new(nrows: usize, ncols: usize, h: &[f64]) -> Result<Self> {
        let at = |k: usize| h.get(k).copied().unwrap_or(0.0);
        let col: Vec<f64> = (0..nrows).map(|i| at(i + ncols - 1)).collect();
        let row: Vec<f64> = (0..ncols).map(|k| at(ncols - 1 - k)).collect();
        Ok(Self {
            inner: Toeplitz::new(nrows, ncols, &col, &row)?,
        })
    }
}

impl LinearOperator for Hankel {
    fn nrows(&self) -> usize {
        self.inner.nrows
    }
    fn ncols(&self) -> usize {
        self.inner.ncols
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        self.inner.apply_into(&rev, y)
    }
}

/// Section of the Chebyshev multiplication operator `M_0[a]`. Low-degree
/// coefficients use the banded matrix; high-degree ones use the
/// Toeplitz-plus-Hankel splitting with FFTs.
#[derive(Debug, Clone)]
pub enum MultiplicationOperator {
    Banded(AlmostBandedMatrix),
    Fft {
        toeplitz: Toeplitz,
        hankel: Hankel,
        coeffs: Vec<f64>,
    },
}

/// Degree above which `M_0[a]` products switch to FFTs.
pub const FFT_DEGREE_THRESHOLD: usize = 96;

impl MultiplicationOperator {
    pub fn new(a: &ChebSeries, nrows: usize, ncols: usize) -> Result<Self> {
        let d = a.degree();
        if d <= FFT_DEGREE_THRESHOLD {
            let m = super::mult_op_cheb_rect(a, nrows, ncols)?;
            return Ok(Self::Banded(m.matrix));
        }
        Self::with_fft(a, nrows, ncols)
    }

    /// Forces the Toeplitz-plus-Hankel FFT path.
    pub fn with_fft(a: &ChebSeries, nrows: usize, ncols: usize) -> Result<Self> {
        let c = a.trimmed().into_coeffs();
        let mut t = c.clone();
        t[0] *= 2.0;
        t.iter_mut().for_each(|v| *v *= 0.5);
        let h: Vec<f64> = c.iter().map(|v| 0.5 * v).collect();
        Ok(Self::Fft {
            toeplitz: Toeplitz::new(nrows, ncols, &t, &t)?,
            hankel: Hankel::new(nrows, ncols, &h)?,
            coeffs: c,
        })
    }
}

impl LinearOperator for MultiplicationOperator {
    fn nrows(&self) -> usize {
        match self {
            Self::Banded(m) => m.nrows(),
            Self::Fft { toeplitz, .. } => toeplitz.nrows,
        }
    }
    fn ncols(&self) -> usize {
        match self {
            Self::Banded(m) => m.ncols(),
            Self::Fft { toeplitz, .. } => toeplitz.ncols,
        }
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Self::Banded(m) => m.matvec_into(x, y),
            Self::Fft {
                toeplitz,
                hankel,
                coeffs,
            } => {
                toeplitz.apply_into(x, y);
                let hy = hankel.apply(x);
                for (a, b) in y.iter_mut().zip(&hy) {
                    *a += b;
                }
                // the Hankel part has no row 0
                let r0: f64 = coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
                y[0] -= 0.5 * r0;
            }
        }
    }
}

/// Sum of operators of equal shape.
pub struct OperatorSum {
    parts: Vec<Box<dyn LinearOperator + Send + Sync>>,
    nrows: usize,
    ncols: usize,
}

impl OperatorSum {
    pub fn new(parts: Vec<Box<dyn LinearOperator + Send + Sync>>) -> Result<Self> {
        let first = parts.first().ok_or_else(|| {
            SpectralError::InvalidArgument("operator sum needs at least one term".into())
        })?;
        let (nrows, ncols) = (first.nrows(), first.ncols());
        if parts.iter().any(|p| p.nrows() != nrows || p.ncols() != ncols) {
            return Err(SpectralError::InvalidArgument(
                "operator sum terms differ in shape".into(),
            ));
        }
        Ok(Self { parts, nrows, ncols })
    }
}

impl LinearOperator for OperatorSum {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut tmp = vec![0.0; self.nrows];
        for p in &self.parts {
            p.apply_into(x, &mut tmp);
            for (a, b) in y.iter_mut().zip(&tmp) {
                *a += b;
            }
        }
    }
}

/// Product `F_0 F_1 ... F_k` (the last factor is applied first).
pub struct OperatorProduct {
    factors: Vec<Box<dyn LinearOperator + Send + Sync>>,
}

impl OperatorProduct {
    pub fn new(factors: Vec<Box<dyn LinearOperator + Send + Sync>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(SpectralError::InvalidArgument(
                "operator product needs at least one factor".into(),
            ));
        }
        for w in factors.windows(2) {
            if w[0].ncols() != w[1].nrows() {
                return Err(SpectralError::InvalidArgument(format!(
                    "operator product: {} columns against {} rows",
                    w[0].ncols(),
                    w[1].nrows()
                )));
            }
        }
        Ok(Self { factors })
    }
}

impl LinearOperator for OperatorProduct {
    fn nrows(&self) -> usize {
        self.factors[0].nrows()
    }
    fn ncols(&self) -> usize {
        self.factors[self.factors.len() - 1].ncols()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let mut cur = x.to_vec();
        for f in self.factors.iter().skip(1).rev() {
            cur = f.apply(&cur);
        }
        self.factors[0].apply_into(&cur, y);
    }
}

/// Applies a structured operator; the fast path of every component is used.
pub fn fast_matvec(op: &dyn LinearOperator, v: &[f64]) -> Vec<f64> {
    op.apply(v)
}
