//! Command-line driver for the `specsolve-core` spectral ODE solvers.
//!
//! ```text
//! specsolve solve      FILE [--method cs|us|pus|colloc|gcs] [--n N | --adaptive] [--out CSV] [--diag PATH]
//! specsolve cond-table FILE --n 128,256 [--methods us,pus,cs] [--lanczos] [--out CSV]
//! specsolve error      SOLUTION.csv (--exact EXPR | --quadrature-of example1 | --residual-of FILE) [--norm l2|linf]
//! specsolve sparsity   FILE --method cs --n 50 --out PREFIX
//! specsolve repro      1|2|3 --out DIR [--max-n N]
//! ```
//!
//! `FILE` is a problem file (grammar in `docs/format.md`) or one of the
//! built-in names `example1`, `example2`, `example3`. Exit status is 0 on
//! success, 1 when a solve or a reproduction criterion fails and 2 for
//! malformed input.

pub mod builtin;
pub mod error;
pub mod expr;
pub mod pipeline;
pub mod problem_file;
pub mod repro;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use specsolve_core::prelude::*;

use crate::builtin::{example, Example1Oracle};
pub use crate::error::{CliError, CliResult};
use crate::expr::parse_expr;
use crate::pipeline::{
    coefficients_csv, cond_table, cond_table_csv, diagnostics_text, l2_error, linf_error, parse_coefficients_csv,
    residual_l2, solve, sparsity, Size,
};
use crate::problem_file::{parse_backend, parse_problem, Method, ProblemFile};

#[derive(Debug, Parser)]
#[command(name = "specsolve", version, about = "Well-conditioned spectral solvers for linear ODEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem and write its Chebyshev coefficients.
    Solve(SolveArgs),
    /// Condition numbers of the discretization matrices.
    CondTable(CondTableArgs),
    /// Error norm of a solution against a reference.
    Error(ErrorArgs),
    /// Nonzero pattern of a discretization matrix.
    Sparsity(SparsityArgs),
    /// Reproduce the tables and figures data of a built-in example.
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Problem file or example1|example2|example3.
    pub problem: String,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Truncation size (`M` for collocation).
    #[arg(long, conflicts_with = "adaptive")]
    pub n: Option<usize>,
    /// Grow the truncation until the solution is resolved.
    #[arg(long)]
    pub adaptive: bool,
    #[arg(long, value_parser = parse_backend)]
    pub backend: Option<Backend>,
    /// Also estimate the condition number of the system.
    #[arg(long)]
    pub cond: bool,
    /// Coefficient CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Diagnostics path; stderr when absent.
    #[arg(long)]
    pub diag: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CondTableArgs {
    pub problem: String,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "us,pus,cs")]
    pub methods: Vec<Method>,
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Allow the Lanczos estimator above the dense SVD budget.
    #[arg(long)]
    pub lanczos: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Norm {
    L2,
    Linf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("reference").required(true).args(["exact", "quadrature_of", "residual_of"])))]
pub struct ErrorArgs {
    /// Coefficient CSV written by `solve`.
    pub solution: PathBuf,
    /// Exact solution as an expression in x.
    #[arg(long, allow_hyphen_values = true)]
    pub exact: Option<String>,
    /// Problem whose exact solution is defined by quadrature (example1).
    #[arg(long)]
    pub quadrature_of: Option<String>,
    /// Measure the equation residual of the solution for this problem.
    #[arg(long)]
    pub residual_of: Option<String>,
    #[arg(long, value_enum, default_value = "l2")]
    pub norm: Norm,
}

#[derive(Debug, Args)]
pub struct SparsityArgs {
    pub problem: String,
    #[arg(long, value_parser = parse_method, default_value = "cs")]
    pub method: Method,
    #[arg(long)]
    pub n: usize,
    /// Output prefix; writes PREFIX.pgm and PREFIX.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    /// Example number.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
    pub example: u8,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip table rows above this size.
    #[arg(long)]
    pub max_n: Option<usize>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

/// Reads a problem file or a built-in example name.
pub fn load_problem(spec: &str) -> CliResult<ProblemFile> {
    if let Some(k) = spec.strip_prefix("example").and_then(|d| d.parse::<u8>().ok()) {
        if !Path::new(spec).exists() {
            return example(k);
        }
    }
    let text = fs::read_to_string(spec).map_err(|e| CliError::io(spec, e))?;
    Ok(parse_problem(&text)?)
}

fn emit(path: Option<&Path>, text: &str, stdout: bool) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None if stdout => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io("<stdout>", e))
        }
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn cmd_solve(a: &SolveArgs) -> CliResult<()> {
    let file = load_problem(&a.problem)?;
    let method = a.method.or(file.options.method).unwrap_or(Method::Cs);
    let size = if a.adaptive {
        Size::Adaptive
    } else if let Some(n) = a.n.or(file.options.n) {
        if file.options.adaptive == Some(true) && a.n.is_none() {
            Size::Adaptive
        } else {
            Size::Fixed(n)
        }
    } else {
        Size::Adaptive
    };
    let backend = a.backend.or(file.options.backend).unwrap_or(Backend::Auto);
    let problem = file.to_problem()?;
    let s = solve(&problem, method, size, backend, a.cond)?;
    emit(a.out.as_deref(), &coefficients_csv(&s.u), true)?;
    emit(a.diag.as_deref(), &diagnostics_text(&s), false)
}

fn cmd_cond_table(a: &CondTableArgs) -> CliResult<()> {
    let problem = load_problem(&a.problem)?.to_problem()?;
    let rows = cond_table(&problem, &a.methods, &a.n, a.lanczos)?;
    emit(a.out.as_deref(), &cond_table_csv(&a.methods, &a.n, &rows), true)
}

fn cmd_error(a: &ErrorArgs) -> CliResult<f64> {
    let text = fs::read_to_string(&a.solution).map_err(|e| CliError::io(&a.solution, e))?;
    let u = parse_coefficients_csv(&text)?;
    let norm = |exact: pipeline::Reference| match a.norm {
        Norm::L2 => l2_error(&u, exact),
        Norm::Linf => linf_error(&u, exact),
    };
    if let Some(e) = &a.exact {
        let e = parse_expr(e)?;
        return norm(&|x, dx| Ok(e.eval_at(x, dx)?));
    }
    if let Some(p) = &a.quadrature_of {
        if p != "example1" {
            return Err(CliError::Usage(format!(
                "no quadrature-defined solution for '{p}' (only example1)"
            )));
        }
        let oracle = Example1Oracle::new()?;
        return norm(&|x, dx| Ok(oracle.u_at(x, dx)));
    }
    let file = load_problem(a.residual_of.as_deref().expect("one reference is required"))?;
    match a.norm {
        Norm::L2 => residual_l2(&file, &u),
        Norm::Linf => pipeline::residual_linf(&file, &u),
    }
}

fn cmd_sparsity(a: &SparsityArgs) -> CliResult<()> {
    let problem = load_problem(&a.problem)?.to_problem()?;
    let p = sparsity(&problem, a.method, a.n)?;
    let with_ext = |ext: &str| {
        let mut s = a.out.clone().into_os_string();
        s.push(ext);
        PathBuf::from(s)
    };
    emit(Some(&with_ext(".pgm")), &p.to_pgm(), true)?;
    emit(Some(&with_ext(".txt")), &p.to_triples(), true)
}

/// Runs one parsed command line. Text results go to stdout.
pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::CondTable(a) => cmd_cond_table(a),
        Command::Error(a) => {
            let v = cmd_error(a)?;
            println!("{v:e}");
            Ok(())
        }
        Command::Sparsity(a) => cmd_sparsity(a),
        Command::Repro(a) => {
            let report = repro::repro(a.example, &a.out, a.max_n)?;
            print!("{}", report.summary());
            if report.all_pass() {
                Ok(())
            } else {
                let failed = report.checks.iter().filter(|c| !c.pass).count();
                Err(CliError::Criteria(format!("{failed} criterion check(s) failed")))
            }
        }
    }
}
