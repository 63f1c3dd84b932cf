//! Line-based problem files; see `docs/format.md`.

use std::fmt;
use std::str::FromStr;

use specsolve_core::cheb::{adaptive_approx_refined, ApproxOptions};
use specsolve_core::prelude::*;
use thiserror::Error;

use crate::error::CliError;
use crate::expr::{parse_args_at, parse_expr_at, EvalError, Expr, ParseError};

/// Discretization selected for `solve`, `sparsity` and tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Chebyshev spectral method on the integral reformulation.
    Cs,
    /// Ultraspherical spectral method.
    Us,
    /// Diagonally preconditioned ultraspherical method.
    Pus,
    /// Rectangular collocation with the Birkhoff PSIM preconditioner.
    Colloc,
    /// Rectangular collocation without preconditioning (condition numbers
    /// and sparsity only).
    Gcs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cs => "cs",
            Method::Us => "us",
            Method::Pus => "pus",
            Method::Colloc => "colloc",
            Method::Gcs => "gcs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cs" => Ok(Method::Cs),
            "us" => Ok(Method::Us),
            "pus" => Ok(Method::Pus),
            "colloc" => Ok(Method::Colloc),
            "gcs" => Ok(Method::Gcs),
            _ => Err(format!("unknown method '{s}' (cs, us, pus, colloc, gcs)")),
        }
    }
}

pub fn parse_backend(s: &str) -> Result<Backend, String> {
    match s {
        "auto" => Ok(Backend::Auto),
        "almost-banded-qr" => Ok(Backend::AlmostBandedQr),
        "dense-qr" => Ok(Backend::DenseQr),
        "dense-lu" => Ok(Backend::DenseLu),
        "bicgstab" => Ok(Backend::BiCgStab),
        _ => Err(format!(
            "unknown backend '{s}' (auto, almost-banded-qr, dense-qr, dense-lu, bicgstab)"
        )),
    }
}

/// A constraint as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSpec {
    Dirichlet(f64),
    Neumann(f64),
    Deriv(usize, f64),
    Integral,
}

impl ConstraintSpec {
    pub fn functional(&self) -> ConstraintFunctional {
        match *self {
            ConstraintSpec::Dirichlet(x) => ConstraintFunctional::dirichlet(x),
            ConstraintSpec::Neumann(x) => ConstraintFunctional::neumann(x),
            ConstraintSpec::Deriv(k, x) => ConstraintFunctional::derivative(k, x),
            ConstraintSpec::Integral => ConstraintFunctional::integral(),
        }
    }
}

/// Solver options that may be given in the file; command-line flags take
/// precedence.
#[derive(Debug, Clone, PartialEq)]
pub struct FileOptions {
    pub method: Option<Method>,
    pub n: Option<usize>,
    pub adaptive: Option<bool>,
    pub backend: Option<Backend>,
    /// Relative chopping tolerance for the coefficient and rhs
    /// approximations.
    pub tol: f64,
}

impl Default for FileOptions {
    fn default() -> Self {
        Self {
            method: None,
            n: None,
            adaptive: None,
            backend: None,
            tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub order: usize,
    /// `coeffs[k]` multiplies `u^(k)`; absent coefficients are zero.
    pub coeffs: Vec<Expr>,
    pub rhs: Expr,
    pub constraints: Vec<(ConstraintSpec, f64)>,
    pub options: FileOptions,
}

/// Syntax or consistency error anchored at `line:col` (1-based).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{col}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl From<ParseError> for FormatError {
    fn from(e: ParseError) -> Self {
        FormatError {
            line: e.line,
            col: e.col,
            message: format!("expected {}, found {}", e.expected.join(" | "), e.found),
        }
    }
}

fn at(line: usize, col: usize, message: impl Into<String>) -> FormatError {
    FormatError {
        line,
        col,
        message: message.into(),
    }
}

/// Byte offset to 1-based character column.
fn col_of(text: &str, byte: usize) -> usize {
    text[..byte].chars().count() + 1
}

fn constant(e: &Expr, line: usize, col: usize, what: &str) -> Result<f64, FormatError> {
    if e.depends_on_x() {
        return Err(at(line, col, format!("{what} must not depend on x")));
    }
    e.eval(0.0).map_err(|err| at(line, col, format!("{what}: {}", err.what)))
}

fn point(e: &Expr, line: usize, col: usize) -> Result<f64, FormatError> {
    let x = constant(e, line, col, "constraint point")?;
    if !(-1.0..=1.0).contains(&x) {
        return Err(at(line, col, format!("constraint point {x} lies outside [-1, 1]")));
    }
    Ok(x)
}

fn parse_int(v: &str, line: usize, col: usize, what: &str) -> Result<usize, FormatError> {
    v.parse::<usize>()
        .map_err(|_| at(line, col, format!("{what} must be a nonnegative integer, found '{v}'")))
}

/// Parses a problem file.
pub fn parse_problem(text: &str) -> Result<ProblemFile, FormatError> {
    let mut order: Option<(usize, usize)> = None;
    let mut coeffs: Vec<(usize, Expr, usize, usize)> = Vec::new();
    let mut rhs: Option<Expr> = None;
    let mut constraints = Vec::new();
    let mut options = FileOptions::default();
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let key_col = col_of(raw, content.len() - content.trim_start().len());
        let Some(eq) = content.find('=') else {
            return Err(at(line, key_col, "expected 'key = value'"));
        };
        let key = content[..eq].trim();
        let value_raw = &content[eq + 1..];
        let value = value_raw.trim();
        let value_col = col_of(raw, eq + 1 + (value_raw.len() - value_raw.trim_start().len()));
        if value.is_empty() {
            return Err(at(line, value_col, format!("missing value for '{key}'")));
        }

        if let Some(open) = key.find('(') {
            let name = key[..open].trim();
            if !key.ends_with(')') {
                return Err(at(line, key_col + key.len(), "expected ')'"));
            }
            let args_start = content.find('(').expect("key contains '('") + 1;
            let args_src = &key[open + 1..key.len() - 1];
            let args_col = col_of(raw, args_start);
            let args = parse_args_at(args_src, line, args_col)?;
            let target = constant(&parse_expr_at(value, line, value_col)?, line, value_col, "constraint value")?;
            let arity = |n: usize| -> Result<(), FormatError> {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(at(line, args_col, format!("{name} takes {n} argument(s), found {}", args.len())))
                }
            };
            let spec = match name {
                "dirichlet" => {
                    arity(1)?;
                    ConstraintSpec::Dirichlet(point(&args[0], line, args_col)?)
                }
                "neumann" => {
                    arity(1)?;
                    ConstraintSpec::Neumann(point(&args[0], line, args_col)?)
                }
                "deriv" => {
                    arity(2)?;
                    let k = constant(&args[0], line, args_col, "derivative order")?;
                    if k < 0.0 || k.fract() != 0.0 {
                        return Err(at(line, args_col, format!("derivative order must be a nonnegative integer, found {k}")));
                    }
                    ConstraintSpec::Deriv(k as usize, point(&args[1], line, args_col)?)
                }
                _ => {
                    return Err(at(
                        line,
                        key_col,
                        format!("unknown constraint '{name}' (dirichlet, neumann, deriv, integral)"),
                    ))
                }
            };
            constraints.push((spec, target));
            continue;
        }

        if key == "integral" {
            let target = constant(&parse_expr_at(value, line, value_col)?, line, value_col, "constraint value")?;
            constraints.push((ConstraintSpec::Integral, target));
            continue;
        }

        if seen.iter().any(|k| k == key) {
            return Err(at(line, key_col, format!("duplicate key '{key}'")));
        }
        seen.push(key.to_string());

        match key {
            "order" => {
                let m = parse_int(value, line, value_col, "order")?;
                if m == 0 {
                    return Err(at(line, value_col, "order must be at least 1"));
                }
                order = Some((m, line));
            }
            "rhs" => rhs = Some(parse_expr_at(value, line, value_col)?),
            "method" => {
                options.method = Some(value.parse().map_err(|e: String| at(line, value_col, e))?);
            }
            "n" => options.n = Some(parse_int(value, line, value_col, "n")?),
            "adaptive" => {
                options.adaptive = Some(match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(at(line, value_col, format!("expected true | false, found '{value}'"))),
                });
            }
            "backend" => {
                options.backend = Some(parse_backend(value).map_err(|e| at(line, value_col, e))?);
            }
            "tol" => {
                let t = constant(&parse_expr_at(value, line, value_col)?, line, value_col, "tol")?;
                if !(t > 0.0) {
                    return Err(at(line, value_col, "tol must be positive"));
                }
                options.tol = t;
            }
            _ => {
                let k = key
                    .strip_prefix('a')
                    .filter(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
                    .and_then(|d| d.parse::<usize>().ok());
                match k {
                    Some(k) => coeffs.push((k, parse_expr_at(value, line, value_col)?, line, key_col)),
                    None => return Err(at(line, key_col, format!("unknown key '{key}'"))),
                }
            }
        }
    }

    let Some((m, order_line)) = order else {
        return Err(at(1, 1, "missing 'order'"));
    };
    let mut exprs = vec![Expr::Num(0.0); m];
    for (k, e, line, col) in coeffs {
        if k >= m {
            return Err(at(line, col, format!("coefficient a{k} needs order > {k}, order is {m}")));
        }
        exprs[k] = e;
    }
    if constraints.len() != m {
        return Err(at(
            order_line,
            1,
            format!("order {m} needs {m} constraints, found {}", constraints.len()),
        ));
    }
    Ok(ProblemFile {
        order: m,
        coeffs: exprs,
        rhs: rhs.unwrap_or(Expr::Num(0.0)),
        constraints,
        options,
    })
}

/// Chebyshev approximation of an expression to relative tolerance `tol`;
/// constants are represented exactly.
pub fn approximate(e: &Expr, tol: f64) -> Result<ChebSeries, CliError> {
    if !e.depends_on_x() {
        return Ok(ChebSeries::constant(e.eval(0.0)?));
    }
    let mut failure: Option<EvalError> = None;
    let res = adaptive_approx_refined(
        |x, dx| {
            e.eval_at(x, dx).map_err(|err| {
                let msg = err.to_string();
                failure = Some(err);
                SpectralError::InvalidArgument(msg)
            })
        },
        ApproxOptions::with_tol(tol),
    );
    match (res, failure) {
        (_, Some(err)) => Err(err.into()),
        (r, None) => Ok(r?),
    }
}

impl ProblemFile {
    pub fn constraint_set(&self) -> ConstraintSet {
        ConstraintSet::new(self.constraints.iter().map(|(c, _)| c.functional()).collect())
    }

    /// Approximates the data and builds the problem.
    pub fn to_problem(&self) -> Result<OdeProblem, CliError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|e| approximate(e, self.options.tol))
            .collect::<Result<Vec<_>, _>>()?;
        let rhs = approximate(&self.rhs, self.options.tol)?;
        let targets = self.constraints.iter().map(|(_, v)| *v).collect();
        Ok(OdeProblem::new(coeffs, rhs, self.constraint_set(), targets)?)
    }
}
