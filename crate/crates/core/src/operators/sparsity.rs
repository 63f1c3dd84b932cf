use std::fmt::Write;

use faer::Mat;

use super::AlmostBandedMatrix;

/// Nonzero pattern of a matrix, for bitmap and coordinate-list export.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityPattern {
    pub nrows: usize,
    pub ncols: usize,
    /// `(row, col, value)` for every entry above the threshold, row-major.
    pub entries: Vec<(usize, usize, f64)>,
    pub threshold: f64,
}

/// Default nonzero threshold `10 eps max|A|`.
pub fn default_threshold(max_abs: f64) -> f64 {
    10.0 * f64::EPSILON * max_abs
}

impl SparsityPattern {
    pub fn from_dense(m: &Mat<f64>, threshold: Option<f64>) -> Self {
        let mut max_abs = 0.0f64;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                max_abs = max_abs.max(m[(i, j)].abs());
            }
        }
        let thr = threshold.unwrap_or_else(|| default_threshold(max_abs));
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.abs() > thr {
                    entries.push((i, j, v));
                }
            }
        }
        Self {
            nrows: m.nrows(),
            ncols: m.ncols(),
            entries,
            threshold: thr,
        }
    }

    pub fn from_almost_banded(a: &AlmostBandedMatrix, threshold: Option<f64>) -> Self {
        let thr = threshold.unwrap_or_else(|| default_threshold(a.max_abs()));
        let mut entries = Vec::new();
        for i in 0..a.nrows() {
            for (j, v) in a.row_entries(i) {
                if v.abs() > thr {
                    entries.push((i, j, v));
                }
            }
        }
        Self {
            nrows: a.nrows(),
            ncols: a.ncols(),
            entries,
            threshold: thr,
        }
    }

    pub fn is_nonzero(&self, i: usize, j: usize) -> bool {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(i, j)))
            .is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Plain PGM (P2) with maxval 1: nonzeros are black (0), zeros white (1).
    pub fn to_pgm(&self) -> String {
        let mut grid = vec![1u8; self.nrows * self.ncols];
        for &(i, j, _) in &self.entries {
            grid[i * self.ncols + j] = 0;
        }
        let mut out = format!("P2\n{} {}\n1\n", self.ncols, self.nrows);
        for row in grid.chunks(self.ncols.max(1)) {
            // plain PGM lines stay under 70 characters
            for chunk in row.chunks(32) {
                let line: Vec<&str> = chunk.iter().map(|&b| if b == 0 { "0" } else { "1" }).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out
    }

    /// One `row col value` triple per line.
    pub fn to_triples(&self) -> String {
        let mut out = String::new();
        for &(i, j, v) in &self.entries {
            let _ = writeln!(out, "{i} {j} {v:e}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pattern() {
        let p = SparsityPattern::from_almost_banded(&AlmostBandedMatrix::identity(3), None);
        assert_eq!(p.nnz(), 3);
        assert!(p.is_nonzero(1, 1));
        assert!(!p.is_nonzero(0, 1));
        assert_eq!(p.to_pgm(), "P2\n3 3\n1\n0 1 1\n1 0 1\n1 1 0\n");
        assert_eq!(p.to_triples(), "0 0 1e0\n1 1 1e0\n2 2 1e0\n");
    }

    #[test]
    fn threshold_drops_roundoff() {
        let mut m = Mat::<f64>::zeros(2, 2);
        m[(0, 0)] = 1.0;
        m[(1, 0)] = 1e-17;
        m[(1, 1)] = 2.0;
        let p = SparsityPattern::from_dense(&m, None);
        assert_eq!(p.nnz(), 2);
    }
}
