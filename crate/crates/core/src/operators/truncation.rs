use super::AlmostBandedMatrix;
use crate::cheb::Basis;
use crate::error::{Result, SpectralError};

/// A finite section of a coefficient-space operator together with the bases
/// that index its rows (range) and columns (domain).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTruncation {
    pub matrix: AlmostBandedMatrix,
    pub row_basis: Basis,
    pub col_basis: Basis,
}

impl OperatorTruncation {
    pub fn new(matrix: AlmostBandedMatrix, row_basis: Basis, col_basis: Basis) -> Self {
        Self {
            matrix,
            row_basis,
            col_basis,
        }
    }

    pub fn identity(n: usize, basis: Basis) -> Self {
        Self::new(AlmostBandedMatrix::identity(n), basis, basis)
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if self.col_basis != inner.row_basis {
            return Err(SpectralError::BasisMismatch(format!(
                "cannot compose: outer operator acts on {} coefficients, inner produces {}",
                self.col_basis, inner.row_basis
            )));
        }
        if self.ncols() != inner.nrows() {
            return Err(SpectralError::InvalidTruncation {
                n: inner.nrows(),
                reason: format!(
                    "outer operator has {} columns but inner has {} rows",
                    self.ncols(),
                    inner.nrows()
                ),
            });
        }
        Ok(Self::new(
            self.matrix.matmul(&inner.matrix),
            self.row_basis,
            inner.col_basis,
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.row_basis != other.row_basis || self.col_basis != other.col_basis {
            return Err(SpectralError::BasisMismatch(format!(
                "cannot add operators {} <- {} and {} <- {}",
                self.row_basis, self.col_basis, other.row_basis, other.col_basis
            )));
        }
        if self.matrix.shape() != other.matrix.shape() {
            return Err(SpectralError::InvalidTruncation {
                n: self.nrows(),
                reason: format!(
                    "shapes {:?} and {:?} differ",
                    self.matrix.shape(),
                    other.matrix.shape()
                ),
            });
        }
        Ok(Self::new(
            self.matrix.add(&other.matrix),
            self.row_basis,
            self.col_basis,
        ))
    }

    /// Leading `nrows x ncols` section.
    pub fn crop(&self, nrows: usize, ncols: usize) -> Self {
        Self::new(self.matrix.crop(nrows, ncols), self.row_basis, self.col_basis)
    }
}
