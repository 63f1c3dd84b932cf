use std::ops::Range;

use faer::Mat;

/// Banded matrix plus a block of dense top rows.
///
/// Rows `0..dense_rows` are stored in full. Every other row `i` stores only
/// columns `i - lower ..= i + upper` (clipped to the matrix). When the band
/// covers every column the matrix is stored as all-dense rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostBandedMatrix {
    nrows: usize,
    ncols: usize,
    lower: usize,
    upper: usize,
    dense_rows: usize,
    dense: Vec<f64>,
    band: Vec<f64>,
}

impl AlmostBandedMatrix {
    pub fn zeros(nrows: usize, ncols: usize, lower: usize, upper: usize, dense_rows: usize) -> Self {
        let lower = lower.min(nrows.saturating_sub(1));
        let upper = upper.min(ncols.saturating_sub(1));
        let mut dense_rows = dense_rows.min(nrows);
        if lower + upper + 1 >= ncols {
            // band wider than the matrix: plain dense storage is cheaper
            dense_rows = nrows;
        }
        let width = lower + upper + 1;
        Self {
            nrows,
            ncols,
            lower,
            upper,
            dense_rows,
            dense: vec![0.0; dense_rows * ncols],
            band: vec![0.0; (nrows - dense_rows) * width],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n, n, 0, 0, 0);
        for i in 0..n {
            a.set(i, i, 1.0);
        }
        a
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(d: &[f64]) -> Self {
        let mut a = Self::zeros(d.len(), d.len(), 0, 0, 0);
        for (i, &v) in d.iter().enumerate() {
            a.set(i, i, v);
        }
        a
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    pub fn dense_rows(&self) -> usize {
        self.dense_rows
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    /// Columns that may hold a nonzero in row `i`.
    pub fn row_support(&self, i: usize) -> Range<usize> {
        if i < self.dense_rows {
            0..self.ncols
        } else {
            let lo = i.saturating_sub(self.lower);
            let hi = (i + self.upper + 1).min(self.ncols);
            lo.min(hi)..hi
        }
    }

    /// Whether `(i, j)` lies inside the stored structure.
    pub fn in_structure(&self, i: usize, j: usize) -> bool {
        i < self.nrows && self.row_support(i).contains(&j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.nrows && j < self.ncols, "index ({i}, {j}) out of bounds");
        if i < self.dense_rows {
            self.dense[i * self.ncols + j]
        } else if j + self.lower >= i && j <= i + self.upper {
            self.band[(i - self.dense_rows) * self.width() + j + self.lower - i]
        } else {
            0.0
        }
    }

    fn slot(&mut self, i: usize, j: usize) -> &mut f64 {
        assert!(i < self.nrows && j < self.ncols, "index ({i}, {j}) out of bounds");
        if i < self.dense_rows {
            &mut self.dense[i * self.ncols + j]
        } else {
            assert!(
                j + self.lower >= i && j <= i + self.upper,
                "entry ({i}, {j}) outside band (lower {}, upper {})",
                self.lower,
                self.upper
            );
            let w = self.width();
            &mut self.band[(i - self.dense_rows) * w + j + self.lower - i]
        }
    }

    /// Sets an entry; panics if `(i, j)` is outside the structure.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        *self.slot(i, j) = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        *self.slot(i, j) += v;
    }

    /// Stored entries of row `i` as `(column, value)`, zeros included.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_support(i);
        let start = range.start;
        let vals: &[f64] = if range.is_empty() {
            &[]
        } else if i < self.dense_rows {
            &self.dense[i * self.ncols..(i + 1) * self.ncols]
        } else {
            let w = self.width();
            let base = (i - self.dense_rows) * w;
            let off = start + self.lower - i;
            &self.band[base + off..base + off + range.len()]
        };
        vals.iter().enumerate().map(move |(k, &v)| (start + k, v))
    }

    /// Full row `k` of the dense block.
    pub fn dense_row(&self, k: usize) -> &[f64] {
        assert!(k < self.dense_rows);
        &self.dense[k * self.ncols..(k + 1) * self.ncols]
    }

    pub fn dense_row_mut(&mut self, k: usize) -> &mut [f64] {
        assert!(k < self.dense_rows);
        let n = self.ncols;
        &mut self.dense[k * n..(k + 1) * n]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_entries(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `A^T x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, v) in self.row_entries(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row_entries(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Copy into a structure at least as large as the current one.
    pub fn restructure(&self, lower: usize, upper: usize, dense_rows: usize) -> Self {
        let mut out = Self::zeros(
            self.nrows,
            self.ncols,
            lower.max(self.lower),
            upper.max(self.upper),
            dense_rows.max(self.dense_rows),
        );
        for i in 0..self.nrows {
            for (j, v) in self.row_entries(i) {
                if v != 0.0 {
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Leading `nrows x ncols` block.
    pub fn crop(&self, nrows: usize, ncols: usize) -> Self {
        assert!(nrows <= self.nrows && ncols <= self.ncols);
        let mut out = Self::zeros(nrows, ncols, self.lower, self.upper, self.dense_rows);
        for i in 0..nrows {
            for (j, v) in self.row_entries(i) {
                if j < ncols && v != 0.0 {
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        self.dense.iter_mut().for_each(|v| *v *= s);
        self.band.iter_mut().for_each(|v| *v *= s);
    }

    /// Multiplies column `j` by `d[j]` (right multiplication by a diagonal).
    pub fn scale_columns(&mut self, d: &[f64]) {
        assert_eq!(d.len(), self.ncols);
        for i in 0..self.nrows {
            let cols: Vec<usize> = self.row_support(i).collect();
            for j in cols {
                *self.slot(i, j) *= d[j];
            }
        }
    }

    /// Entrywise sum; the structure is the union of both structures.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in sum");
        let mut out = Self::zeros(
            self.nrows,
            self.ncols,
            self.lower.max(other.lower),
            self.upper.max(other.upper),
            self.dense_rows.max(other.dense_rows),
        );
        for m in [self, other] {
            for i in 0..m.nrows {
                for (j, v) in m.row_entries(i) {
                    if v != 0.0 {
                        out.add_to(i, j, v);
                    }
                }
            }
        }
        out
    }

    /// Matrix product `self * other`. Bandwidths add; the dense block grows
    /// to `max(r_A, r_B + lower_A)` rows.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let dense_rows = self.dense_rows.max(other.dense_rows + self.lower);
        let mut out = Self::zeros(
            self.nrows,
            other.ncols,
            self.lower + other.lower,
            self.upper + other.upper,
            dense_rows,
        );
        for i in 0..self.nrows {
            for (k, a) in self.row_entries(i) {
                if a == 0.0 {
                    continue;
                }
                for (j, b) in other.row_entries(k) {
                    if b != 0.0 {
                        out.add_to(i, j, a * b);
                    }
                }
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.dense
            .iter()
            .chain(&self.band)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row_entries(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Builds from a dense matrix with the given structure; entries outside
    /// the structure must be zero.
    pub fn from_dense(m: &Mat<f64>, lower: usize, upper: usize, dense_rows: usize) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols(), lower, upper, dense_rows);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}
