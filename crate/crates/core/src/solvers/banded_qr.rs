use super::{Backend, SolveDiagnostics};
use crate::error::{Result, SpectralError};
use crate::operators::AlmostBandedMatrix;

/// Row under elimination. Columns `base..hi` are explicit (`hi = base +
/// vals.len()`); every column `c >= hi` equals `Σ_k coef[k] dense_k[c]`,
/// a combination of the original dense rows.
struct WorkRow {
    base: usize,
    vals: Vec<f64>,
    coef: Vec<f64>,
}

impl WorkRow {
    fn hi(&self) -> usize {
        self.base + self.vals.len()
    }

    fn at(&self, c: usize) -> f64 {
        self.vals[c - self.base]
    }

    fn extend_to(&mut self, hi: usize, a: &AlmostBandedMatrix) {
        let cur = self.hi();
        if hi <= cur {
            return;
        }
        let r = self.coef.len();
        for c in cur..hi {
            let mut v = 0.0;
            for k in 0..r {
                let w = self.coef[k];
                if w != 0.0 {
                    v += w * a.dense_row(k)[c];
                }
            }
            self.vals.push(v);
        }
    }
}

/// Solves `A x = b` for square almost-banded `A` by Givens QR.
///
/// Column `j` is eliminated by rotating row `j` against each row below it
/// that can hold a nonzero in column `j` (rows up to `max(j + lower,
/// dense_rows - 1)`). Fill-in stays within `lower + upper` superdiagonals;
/// the dense top rows are never stored in full beyond the current window but
/// are carried as coefficient vectors over the original dense rows. Back
/// substitution uses suffix sums of the original dense rows against the
/// solution. Work is `O(n lower (lower + upper + dense_rows))`. No pivoting
/// is needed since rotations are orthogonal.
pub fn almost_banded_qr_solve(
    a: &AlmostBandedMatrix,
    b: &[f64],
) -> Result<(Vec<f64>, SolveDiagnostics)> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(SpectralError::InvalidArgument(format!(
            "system is {}x{} with right-hand side of length {}",
            n,
            a.ncols(),
            b.len()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), SolveDiagnostics::new(0, Backend::AlmostBandedQr, 0.0)));
    }
    let r = a.dense_rows();
    let l = a.lower();
    let norm = a.norm_inf();
    let threshold = f64::EPSILON * norm * n as f64;

    let mut rows: Vec<WorkRow> = (0..n)
        .map(|i| {
            let mut coef = vec![0.0; r];
            if i < r {
                coef[i] = 1.0;
                WorkRow {
                    base: 0,
                    vals: Vec::new(),
                    coef,
                }
            } else {
                let sup = a.row_support(i);
                WorkRow {
                    base: sup.start,
                    vals: a.row_entries(i).map(|(_, v)| v).collect(),
                    coef,
                }
            }
        })
        .collect();
    let mut rhs = b.to_vec();

    for j in 0..n {
        let last = (j + l).max(r.saturating_sub(1)).min(n - 1);
        let need = j + 1;
        rows[j].extend_to(need, a);
        for q in j + 1..=last {
            rows[q].extend_to(need, a);
            let bq = rows[q].at(j);
            if bq == 0.0 {
                continue;
            }
            let hi = rows[j].hi().max(rows[q].hi());
            let (head, tail) = rows.split_at_mut(q);
            let p_row = &mut head[j];
            let q_row = &mut tail[0];
            p_row.extend_to(hi, a);
            q_row.extend_to(hi, a);
            let ap = p_row.at(j);
            let h = ap.hypot(bq);
            let (c, s) = (ap / h, bq / h);
            for col in j..hi {
                let x = p_row.vals[col - p_row.base];
                let y = q_row.vals[col - q_row.base];
                p_row.vals[col - p_row.base] = c * x + s * y;
                q_row.vals[col - q_row.base] = -s * x + c * y;
            }
            q_row.vals[j - q_row.base] = 0.0;
            for k in 0..r {
                let x = p_row.coef[k];
                let y = q_row.coef[k];
                p_row.coef[k] = c * x + s * y;
                q_row.coef[k] = -s * x + c * y;
            }
            let (x, y) = (rhs[j], rhs[q]);
            rhs[j] = c * x + s * y;
            rhs[q] = -s * x + c * y;
        }
        let piv = rows[j].at(j);
        if !(piv.abs() > threshold) {
            return Err(SpectralError::SingularSystem {
                index: j,
                pivot: piv,
                threshold,
            });
        }
    }

    // suffix[k * (n + 1) + c] = Σ_{c' >= c} dense_k[c'] x[c']
    let mut suffix = vec![0.0; r * (n + 1)];
    let mut x = vec![0.0; n];
    for j in (0..n).rev() {
        let row = &rows[j];
        let hi = row.hi();
        let mut s = rhs[j];
        for c in j + 1..hi {
            s -= row.at(c) * x[c];
        }
        for k in 0..r {
            if row.coef[k] != 0.0 {
                s -= row.coef[k] * suffix[k * (n + 1) + hi];
            }
        }
        x[j] = s / row.at(j);
        for k in 0..r {
            suffix[k * (n + 1) + j] = suffix[k * (n + 1) + j + 1] + a.dense_row(k)[j] * x[j];
        }
    }

    let ax = a.matvec(&x);
    let res = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    Ok((x, SolveDiagnostics::new(n, Backend::AlmostBandedQr, res)))
}
