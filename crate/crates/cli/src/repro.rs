//! End-to-end reproduction of the three benchmark examples: condition
//! tables, errors, iteration counts and sparsity patterns, each compared
//! with reference values.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use specsolve_core::prelude::*;

use crate::builtin::{example, Example1Oracle, EXAMPLE2_EXACT};
use crate::error::{CliError, CliResult};
use crate::expr::parse_expr;
use crate::pipeline::{
    bicgstab_run, coefficients_csv, consistency_l2, cond_table, cond_table_csv, l2_error, residual_l2, sig5, solve, sparsity, Size,
};
use crate::problem_file::Method;

/// Reference condition numbers: `(n, US, P-US, CS)`.
pub const EXAMPLE1_CONDS: [(usize, f64, f64, f64); 4] = [
    (128, 2.4045e2, 3.9813, 2.5955),
    (256, 4.8312e2, 3.9864, 2.5955),
    (512, 9.6846e3, 3.9889, 2.5955),
    (1024, 1.9391e4, 3.9901, 2.5955),
];

pub const EXAMPLE2_CONDS: [(usize, f64, f64, f64); 4] = [
    (1024, 1.7953e3, 3.3256, 1.0912),
    (2048, 3.5925e3, 3.3261, 1.0912),
    (4096, 7.1870e3, 3.3264, 1.0912),
    (8192, 1.4376e4, 3.3265, 1.0912),
];

/// Reference condition number of the Example 3 integral-reformulation matrix.
pub const EXAMPLE3_COND: f64 = 1.7444;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReproReport {
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl ReproReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self) -> String {
        let mut s: String = self.checks.iter().map(|c| format!("{c}\n")).collect();
        for f in &self.files {
            s.push_str(&format!("wrote {}\n", f.display()));
        }
        s
    }

    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> CliResult<()> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

fn capped(ns: &[usize], max_n: Option<usize>) -> Vec<usize> {
    ns.iter().copied().filter(|&n| max_n.is_none_or(|m| n <= m)).collect()
}

fn rel_within(v: f64, want: f64, rel: f64) -> bool {
    (v - want).abs() <= rel * want.abs()
}

/// Runs the pipeline for example `k` and writes its artifacts into `out`.
/// Sizes above `max_n` are skipped.
pub fn repro(k: u8, out: &Path, max_n: Option<usize>) -> CliResult<ReproReport> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut report = ReproReport::default();
    match k {
        1 => repro_example1(out, max_n, &mut report)?,
        2 => repro_example2(out, max_n, &mut report)?,
        3 => repro_example3(out, &mut report)?,
        _ => return Err(CliError::Usage(format!("no built-in example {k} (1, 2 or 3)"))),
    }
    let summary = report.summary();
    report.write(out, "summary.txt", &summary)?;
    Ok(report)
}

const TABLE_METHODS: [Method; 3] = [Method::Us, Method::Pus, Method::Cs];

fn write_sparsity(report: &mut ReproReport, out: &Path, problem: &OdeProblem, method: Method, n: usize) -> CliResult<()> {
    let p = sparsity(problem, method, n)?;
    let stem = format!("sparsity_{}_{n}", method.name());
    report.write(out, &format!("{stem}.pgm"), &p.to_pgm())?;
    report.write(out, &format!("{stem}.txt"), &p.to_triples())
}

fn repro_example1(out: &Path, max_n: Option<usize>, report: &mut ReproReport) -> CliResult<()> {
    let file = example(1)?;
    let problem = file.to_problem()?;
    let ns = capped(&EXAMPLE1_CONDS.map(|r| r.0), max_n);
    let rows = cond_table(&problem, &TABLE_METHODS, &ns, false)?;
    report.write(out, "table1.csv", &cond_table_csv(&TABLE_METHODS, &ns, &rows))?;
    for (n, row) in ns.iter().zip(&rows) {
        let want = EXAMPLE1_CONDS.iter().find(|r| r.0 == *n).expect("tabulated n");
        report.checks.push(Check::new(
            format!("table1 cs n={n}"),
            (row[2] - want.3).abs() <= 1e-3,
            format!("{} vs {}", sig5(row[2]), sig5(want.3)),
        ));
        report.checks.push(Check::new(
            format!("table1 pus n={n}"),
            (row[1] - want.2).abs() <= 1e-2,
            format!("{} vs {}", sig5(row[1]), sig5(want.2)),
        ));
    }
    if let Some(first) = rows.first() {
        if ns[0] == 128 {
            report.checks.push(Check::new(
                "table1 us n=128",
                rel_within(first[0], EXAMPLE1_CONDS[0].1, 0.01),
                format!("{} vs {}", sig5(first[0]), sig5(EXAMPLE1_CONDS[0].1)),
            ));
        }
        let increasing = rows.windows(2).all(|w| w[1][0] > w[0][0]);
        report.checks.push(Check::new(
            "table1 us increasing",
            increasing,
            rows.iter().map(|r| sig5(r[0])).collect::<Vec<_>>().join(" < "),
        ));
    }

    let s = solve(&problem, Method::Cs, Size::Adaptive, Backend::Auto, false)?;
    report.write(out, "solution_cs.csv", &coefficients_csv(&s.u))?;
    let oracle = Example1Oracle::new()?;
    let err = l2_error(&s.u, &|x, dx| Ok(oracle.u_at(x, dx)))?;
    let res = residual_l2(&file, &s.u)?;
    let consistency = consistency_l2(&problem, &s.u)?;
    report.write(
        out,
        "errors.txt",
        &format!(
            "n_used: {}\nrhs_degree: {}\nl2_error: {err:e}\nderivative_residual_l2: {res:e}\nseries_consistency_l2: {consistency:e}\n",
            s.diagnostics.n_used,
            problem.rhs().degree()
        ),
    )?;
    report.checks.push(Check::new("example1 l2 error", err <= 1e-12, format!("{err:.3e} <= 1e-12")));
    report.checks.push(Check::new(
        "example1 derivative residual",
        res <= 1e-12,
        format!("{res:.3e} <= 1e-12"),
    ));
    write_sparsity(report, out, &problem, Method::Cs, 50)?;
    write_sparsity(report, out, &problem, Method::Us, 50)
}

fn repro_example2(out: &Path, max_n: Option<usize>, report: &mut ReproReport) -> CliResult<()> {
    let problem = example(2)?.to_problem()?;
    let ns = capped(&[1024, 2048, 4096], max_n);
    let rows = cond_table(&problem, &TABLE_METHODS, &ns, true)?;
    report.write(out, "table2.csv", &cond_table_csv(&TABLE_METHODS, &ns, &rows))?;
    for (n, row) in ns.iter().zip(&rows) {
        let want = EXAMPLE2_CONDS.iter().find(|r| r.0 == *n).expect("tabulated n");
        report.checks.push(Check::new(
            format!("table2 cs n={n}"),
            (row[2] - want.3).abs() <= 1e-3,
            format!("{} vs {}", sig5(row[2]), sig5(want.3)),
        ));
        report.checks.push(Check::new(
            format!("table2 pus n={n}"),
            (row[1] - want.2).abs() <= 5e-3,
            format!("{} vs {}", sig5(row[1]), sig5(want.2)),
        ));
    }

    let exact = parse_expr(EXAMPLE2_EXACT)?;
    let exact_fn = |x: f64, dx: f64| Ok(exact.eval_at(x, dx)?);
    let mut iters = String::from("n,us,pus,cs\n");
    let mut curve = String::from("n,us,pus,cs\n");
    let mut counts: Vec<[Option<usize>; 3]> = Vec::new();
    for &n in &ns {
        let mut row = [None; 3];
        iters.push_str(&n.to_string());
        curve.push_str(&n.to_string());
        for (slot, &m) in TABLE_METHODS.iter().enumerate() {
            let run = bicgstab_run(&problem, m, n)?;
            row[slot] = run.iterations;
            match run.iterations {
                Some(k) => iters.push_str(&format!(",{k}")),
                None => iters.push_str(",fail"),
            }
            match &run.u {
                Some(u) => curve.push_str(&format!(",{:.4e}", l2_error(u, &exact_fn)?)),
                None => curve.push_str(",fail"),
            }
        }
        iters.push('\n');
        curve.push('\n');
        counts.push(row);
    }
    report.write(out, "iterations.csv", &iters)?;
    report.write(out, "error_curve.csv", &curve)?;
    // flatness needs at least two sizes
    for (slot, name) in [(1, "pus"), (2, "cs")].into_iter().filter(|_| counts.len() >= 2) {
        let ks: Vec<Option<usize>> = counts.iter().map(|r| r[slot]).collect();
        let ok = ks.iter().all(|k| k.is_some()) && {
            let v: Vec<usize> = ks.iter().flatten().copied().collect();
            v.iter().max().unwrap_or(&0) - v.iter().min().unwrap_or(&0) <= 2
        };
        report.checks.push(Check::new(
            format!("iterations {name} flat"),
            ok,
            format!("{ks:?} within ±2"),
        ));
    }
    if let (Some(row), Some(&4096)) = (counts.last(), ns.last()) {
        let base = row[1].unwrap_or(0).max(row[2].unwrap_or(0)).max(1);
        let ok = row[0].is_none_or(|k| k >= 5 * base);
        report.checks.push(Check::new(
            "iterations us n=4096",
            ok,
            format!("{:?} vs 5 x {base}", row[0]),
        ));
    }

    let s = solve(&problem, Method::Cs, Size::Adaptive, Backend::Auto, false)?;
    report.write(out, "solution_cs.csv", &coefficients_csv(&s.u))?;
    let err = l2_error(&s.u, &exact_fn)?;
    report.checks.push(Check::new(
        "example2 l2 error",
        err <= 1e-10,
        format!("{err:.3e} <= 1e-10 at n={}", s.diagnostics.n_used),
    ));
    Ok(())
}

fn repro_example3(out: &Path, report: &mut ReproReport) -> CliResult<()> {
    let problem = example(3)?.to_problem()?;
    let ns = [64usize, 128, 256];
    let rows = cond_table(&problem, &[Method::Cs], &ns, false)?;
    report.write(out, "cond.csv", &cond_table_csv(&[Method::Cs], &ns, &rows))?;
    for (n, row) in ns.iter().zip(&rows) {
        report.checks.push(Check::new(
            format!("example3 cs n={n}"),
            (row[0] - EXAMPLE3_COND).abs() <= 1e-3,
            format!("{} vs {}", sig5(row[0]), sig5(EXAMPLE3_COND)),
        ));
    }
    let s = solve(&problem, Method::Cs, Size::Fixed(128), Backend::Auto, false)?;
    report.write(out, "solution_cs.csv", &coefficients_csv(&s.u))?;
    let even = s.u.coeffs().iter().step_by(2).fold(0.0f64, |m, c| m.max(c.abs()));
    report.checks.push(Check::new(
        "example3 odd symmetry",
        even <= 1e-12,
        format!("max even |c_j| = {even:.3e} <= 1e-12"),
    ));
    write_sparsity(report, out, &problem, Method::Cs, 100)
}
