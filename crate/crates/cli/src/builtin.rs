//! The three benchmark problems and their reference solutions.

use specsolve_core::cheb::gauss_legendre;

use crate::error::{CliError, CliResult};
use crate::problem_file::{parse_problem, ProblemFile};

/// `u' + x^3 u = 100 sin(20000 x^2)`, `u(-1) = 0`.
pub const EXAMPLE1: &str = "\
# u' + x^3 u = 100 sin(20000 x^2), u(-1) = 0
order = 1
a0 = x^3
rhs = 100*sin(20000*x^2)
dirichlet(-1) = 0
";

/// `u' + u / (50000 x^2 + 1) = 0`, `u(-1) = 1`.
pub const EXAMPLE2: &str = "\
# u' + u / (50000 x^2 + 1) = 0, u(-1) = 1
order = 1
a0 = 1/(50000*x^2 + 1)
rhs = 0
dirichlet(-1) = 1
";

/// Tenth-order problem with odd solution.
pub const EXAMPLE3: &str = "\
# u^(10) + cosh(x) u^(8) + x^2 u^(6) + x^4 u^(4) + cos(x) u'' + x^2 u = 0
order = 10
a0 = x^2
a2 = cos(x)
a4 = x^4
a6 = x^2
a8 = cosh(x)
deriv(0, -1) = 0
deriv(1, -1) = 1
deriv(2, -1) = 0
deriv(3, -1) = 0
deriv(4, -1) = 0
deriv(0, 1) = 0
deriv(1, 1) = 1
deriv(2, 1) = 0
deriv(3, 1) = 0
deriv(4, 1) = 0
";

/// Closed-form solution of Example 2.
pub const EXAMPLE2_EXACT: &str = "exp(-(atan(sqrt(50000)*x) + atan(sqrt(50000)))/sqrt(50000))";

pub fn example_text(k: u8) -> CliResult<&'static str> {
    match k {
        1 => Ok(EXAMPLE1),
        2 => Ok(EXAMPLE2),
        3 => Ok(EXAMPLE3),
        _ => Err(CliError::Usage(format!("no built-in example {k} (1, 2 or 3)"))),
    }
}

pub fn example(k: u8) -> CliResult<ProblemFile> {
    Ok(parse_problem(example_text(k)?)?)
}

/// Width bound for one quadrature panel: 50 panels per `2π / 20000`.
pub const ORACLE_PANEL_WIDTH: f64 = 2.0 * std::f64::consts::PI / (20000.0 * 50.0);
const ORACLE_NODES: usize = 10;

/// `100 exp(t^4/4) sin(20000 t^2)` at `t = t_hi + t_lo`, with the phase
/// `20000 t^2` carried in double-double so that the sine is accurate near
/// `|t| = 1`.
fn example1_integrand(t: f64, t_lo: f64) -> f64 {
    let t2 = t * t;
    let t2_lo = t.mul_add(t, -t2) + 2.0 * t * t_lo;
    let ph = 20000.0 * t2;
    let ph_lo = 20000.0f64.mul_add(t2, -ph) + 20000.0 * t2_lo;
    let s = ph.sin() + ph.cos() * ph_lo;
    100.0 * (0.25 * t2 * t2).exp() * s
}

/// `∫_a^b` of the integrand by the rule `(nodes, weights)` on `[-1, 1]`,
/// with node positions kept to double-double accuracy.
fn panel_rule(a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let two_sum = |x: f64, y: f64| {
        let s = x + y;
        let yy = s - x;
        (s, (x - (s - yy)) + (y - yy))
    };
    let (sum, sum_lo) = two_sum(a, b);
    let (dif, dif_lo) = two_sum(b, -a);
    let (c, c_lo) = (0.5 * sum, 0.5 * sum_lo);
    let (r, r_lo) = (0.5 * dif, 0.5 * dif_lo);
    let s: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(&tau, w)| {
            let p = r * tau;
            let p_lo = r.mul_add(tau, -p) + r_lo * tau;
            let t = c + p;
            let t_lo = ((c - t) + p) + c_lo + p_lo;
            w * example1_integrand(t, t_lo)
        })
        .sum();
    r * s
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Example 1's exact solution
/// `u(x) = exp(-x^4/4) ∫_{-1}^x 100 exp(t^4/4) sin(20000 t^2) dt`
/// by composite Gauss-Legendre quadrature on panels of width at most
/// [`ORACLE_PANEL_WIDTH`].
pub struct Example1Oracle {
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `prefix[k] = ∫_{-1}^{-1 + k h}`.
    prefix: Vec<f64>,
}

impl Example1Oracle {
    pub fn new() -> CliResult<Self> {
        let panels = (2.0 / ORACLE_PANEL_WIDTH).ceil() as usize;
        let h = 2.0 / panels as f64;
        let gl = gauss_legendre(ORACLE_NODES)?;
        let mut oracle = Self {
            h,
            nodes: gl.nodes,
            weights: gl.weights,
            prefix: Vec::with_capacity(panels + 1),
        };
        let mut acc = CompensatedSum::default();
        oracle.prefix.push(0.0);
        for k in 0..panels {
            acc.add(oracle.panel(oracle.boundary(k), oracle.boundary(k + 1)));
            oracle.prefix.push(acc.value());
        }
        Ok(oracle)
    }

    fn boundary(&self, k: usize) -> f64 {
        -1.0 + k as f64 * self.h
    }

    fn panel(&self, a: f64, b: f64) -> f64 {
        panel_rule(a, b, &self.nodes, &self.weights)
    }

    /// `∫_{-1}^x` of the integrand.
    pub fn integral(&self, x: f64) -> f64 {
        let panels = self.prefix.len() - 1;
        let k = (((x + 1.0) / self.h).floor().max(0.0) as usize).min(panels - 1);
        self.prefix[k] + self.panel(self.boundary(k), x)
    }

    pub fn u(&self, x: f64) -> f64 {
        (-0.25 * x.powi(4)).exp() * self.integral(x)
    }

    /// `u(x + dx)` to first order in `dx`, with `u' = f - x^3 u`.
    pub fn u_at(&self, x: f64, dx: f64) -> f64 {
        let u = self.u(x);
        if dx == 0.0 {
            return u;
        }
        u + dx * (example1_integrand(x, 0.0) * (-0.25 * x.powi(4)).exp() - x.powi(3) * u)
    }
}
