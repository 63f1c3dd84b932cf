use crate::error::{Result, SpectralError};

/// Truncation growth schedule for [`adaptive_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub n_start: usize,
    pub n_max: usize,
    /// Relative size of the solution tail that counts as resolved.
    pub tail_tol: f64,
    /// Number of trailing coefficients inspected.
    pub window: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            n_start: 32,
            n_max: 1 << 17,
            tail_tol: 1e-14,
            window: 8,
        }
    }
}

/// `‖v[n - window..]‖_∞ <= tol ‖v‖_∞`.
pub fn tail_converged(v: &[f64], window: usize, tol: f64) -> bool {
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if vmax == 0.0 {
        return true;
    }
    let start = v.len().saturating_sub(window);
    let tail = v[start..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.len() > window && tail <= tol * vmax
}

/// Calls `solve_at(n)` for `n = n_start, 2 n_start, ...` until the returned
/// coefficient vector has a resolved tail. Returns the accepted vector, the
/// solver's extra output and the `n` used.
pub fn adaptive_solve<T>(
    mut solve_at: impl FnMut(usize) -> Result<(Vec<f64>, T)>,
    opts: AdaptiveOptions,
) -> Result<(Vec<f64>, T, usize)> {
    let mut n = opts.n_start.max(opts.window + 1);
    loop {
        if n > opts.n_max {
            return Err(SpectralError::ResolutionFailure(format!(
                "solution tail not below {:e} at n_max = {}",
                opts.tail_tol, opts.n_max
            )));
        }
        let (v, extra) = solve_at(n)?;
        if tail_converged(&v, opts.window, opts.tail_tol) {
            return Ok((v, extra, n));
        }
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stops_when_tail_is_small() {
        // geometric decay 0.5^j resolves once 0.5^(n-8) <= 1e-14
        let (v, _, n) = adaptive_solve(
            |n| Ok(((0..n).map(|j| 0.5f64.powi(j as i32)).collect(), ())),
            AdaptiveOptions::default(),
        )
        .unwrap();
        assert_eq!(n, 64);
        assert_eq!(v.len(), 64);
    }

    #[test]
    fn fails_past_n_max() {
        let opts = AdaptiveOptions {
            n_max: 128,
            ..AdaptiveOptions::default()
        };
        let r = adaptive_solve(|n| Ok((vec![1.0; n], ())), opts);
        assert!(matches!(r, Err(SpectralError::ResolutionFailure(_))));
    }
}
