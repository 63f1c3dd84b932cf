//! Scalar expressions in `x`: parser, printer and evaluator.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'x' | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2 = -(x^2)`) and is
//! right-associative (`2^3^2 = 2^9`).

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Sinh,
    Cosh,
    Atan,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Sinh,
        Func::Cosh,
        Func::Atan,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Atan => "atan",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Atan => v.atan(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
            BinOp::Pow => pow(a, b),
        }
    }
}

/// Integer exponents use repeated multiplication so that `x^3` is exact
/// where `x*x*x` is.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
type Dd = (f64, f64);

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    (s, b - (s - a))
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn finite_or_plain(r: Dd, plain: f64) -> Dd {
    if r.0.is_finite() && r.1.is_finite() {
        r
    } else {
        (plain, 0.0)
    }
}

fn dd_add(a: Dd, b: Dd) -> Dd {
    let (s, e) = two_sum(a.0, b.0);
    finite_or_plain(quick_two_sum(s, e + a.1 + b.1), a.0 + b.0)
}

fn dd_mul(a: Dd, b: Dd) -> Dd {
    let (p, e) = two_prod(a.0, b.0);
    finite_or_plain(quick_two_sum(p, e + a.0 * b.1 + a.1 * b.0), a.0 * b.0)
}

fn dd_div(a: Dd, b: Dd) -> Dd {
    let q1 = a.0 / b.0;
    let r = dd_add(a, {
        let m = dd_mul(b, (q1, 0.0));
        (-m.0, -m.1)
    });
    finite_or_plain(quick_two_sum(q1, r.0 / b.0), q1)
}

fn dd_pow(a: Dd, b: Dd) -> Dd {
    if b.1 == 0.0 && b.0.fract() == 0.0 && b.0.abs() <= 64.0 {
        let mut k = b.0.abs() as u32;
        let mut base = a;
        let mut acc: Dd = (1.0, 0.0);
        while k > 0 {
            if k & 1 == 1 {
                acc = dd_mul(acc, base);
            }
            base = dd_mul(base, base);
            k >>= 1;
        }
        return if b.0 < 0.0 { dd_div((1.0, 0.0), acc) } else { acc };
    }
    let p = pow(a.0, b.0);
    let mut corr = 0.0;
    if a.1 != 0.0 {
        corr += b.0 * pow(a.0, b.0 - 1.0) * a.1;
    }
    if b.1 != 0.0 && a.0 > 0.0 {
        corr += a.0.ln() * p * b.1;
    }
    finite_or_plain(quick_two_sum(p, corr), p)
}

fn with_correction(fh: f64, slope: f64, lo: f64) -> Dd {
    if lo == 0.0 || !(slope * lo).is_finite() {
        return (fh, 0.0);
    }
    quick_two_sum(fh, slope * lo)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Nonnegative finite literal.
    Num(f64),
    X,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Position of a syntax error (1-based) with the tokens that would have
/// been accepted there.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: expected {}, found {found}", expected.join(" | "))]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
}

/// Evaluation failure at a sample point.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{what} at x = {x}")]
pub struct EvalError {
    pub x: f64,
    pub what: String,
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn neg(e: Expr) -> Self {
        Expr::Neg(Box::new(e))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, a: Expr) -> Self {
        Expr::Call(f, Box::new(a))
    }

    /// Whether the expression mentions `x`.
    pub fn depends_on_x(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::X => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_x(),
            Expr::Bin(_, a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }

    /// Value at `x`. Division by zero, `sqrt` of a negative number and
    /// non-finite results are errors.
    ///
    /// Arithmetic is carried in double-double and functions are corrected
    /// to first order in the low part of their argument, so `sin(20000*x^2)`
    /// is accurate to a few ulps instead of `eps * 20000`.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.eval_at(x, 0.0)
    }

    /// Value at the double-double abscissa `x + dx`.
    pub fn eval_at(&self, x: f64, dx: f64) -> Result<f64, EvalError> {
        let v = self.eval_dd((x, dx))?;
        Ok(v.0 + v.1)
    }

    fn eval_dd(&self, xd: Dd) -> Result<Dd, EvalError> {
        let x = xd.0;
        let err = |what: String| EvalError { x, what };
        let v = match self {
            Expr::Num(v) => (*v, 0.0),
            Expr::X => xd,
            Expr::Neg(a) => {
                let (h, l) = a.eval_dd(xd)?;
                (-h, -l)
            }
            Expr::Bin(op, a, b) => {
                let (p, q) = (a.eval_dd(xd)?, b.eval_dd(xd)?);
                match op {
                    BinOp::Add => dd_add(p, q),
                    BinOp::Sub => dd_add(p, (-q.0, -q.1)),
                    BinOp::Mul => dd_mul(p, q),
                    BinOp::Div => {
                        if q.0 == 0.0 {
                            return Err(err(format!("division by zero in {self}")));
                        }
                        dd_div(p, q)
                    }
                    BinOp::Pow => dd_pow(p, q),
                }
            }
            Expr::Call(f, a) => {
                let (h, l) = a.eval_dd(xd)?;
                if *f == Func::Sqrt && h < 0.0 {
                    return Err(err(format!("sqrt of negative value {h} in {self}")));
                }
                let fh = f.apply(h);
                let slope = match f {
                    Func::Sin => h.cos(),
                    Func::Cos => -h.sin(),
                    Func::Tan => 1.0 + fh * fh,
                    Func::Exp => fh,
                    Func::Sinh => h.cosh(),
                    Func::Cosh => h.sinh(),
                    Func::Atan => 1.0 / (1.0 + h * h),
                    Func::Sqrt => 0.5 / fh,
                    Func::Abs => h.signum(),
                };
                with_correction(fh, slope, l)
            }
        };
        if !v.0.is_finite() {
            return Err(err(format!("non-finite value in {self}")));
        }
        Ok(v)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::X | Expr::Call(..) => 5,
        }
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Minimal parenthesization that reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => f.write_str("x"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_wrapped(f, a, a.precedence() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, a, b) => {
                let p = self.precedence();
                if *op == BinOp::Pow {
                    write_wrapped(f, a, a.precedence() <= 4)?;
                    f.write_str("^")?;
                    write_wrapped(f, b, b.precedence() < 3)
                } else {
                    write_wrapped(f, a, a.precedence() < p)?;
                    write!(f, " {} ", op.symbol())?;
                    write_wrapped(f, b, b.precedence() <= p)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Sym(c) => write!(f, "'{c}'"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(src: &str, line: usize, col0: usize) -> Result<Lexer, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => toks.push((Tok::Num(v), start)),
                _ => {
                    return Err(ParseError {
                        line,
                        col: col0 + start,
                        expected: vec!["finite number".into()],
                        found: format!("'{text}'"),
                    })
                }
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^(),".contains(c) {
            toks.push((Tok::Sym(c), start));
            i += 1;
        } else {
            return Err(ParseError {
                line,
                col: col0 + start,
                expected: vec!["number".into(), "'x'".into(), "function".into(), "operator".into()],
                found: format!("'{c}'"),
            });
        }
    }
    toks.push((Tok::End, chars.len()));
    Ok(Lexer { toks })
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    col0: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let (tok, col) = &self.toks[self.pos];
        ParseError {
            line: self.line,
            col: self.col0 + col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: tok.to_string(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            let s = format!("'{c}'");
            Err(self.error(&[&s]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::bin(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::bin(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat('^') {
            return Ok(Expr::bin(BinOp::Pow, base, self.unary()?));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        const START: [&str; 5] = ["number", "'x'", "function", "'('", "'-'"];
        match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) if name == "x" => {
                self.pos += 1;
                Ok(Expr::X)
            }
            Tok::Ident(name) => match Func::from_name(&name) {
                Some(func) => {
                    self.pos += 1;
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    Ok(Expr::call(func, arg))
                }
                None => Err(self.error(&START)),
            },
            Tok::Sym('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            _ => Err(self.error(&START)),
        }
    }
}

/// Parses a whole expression.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    parse_expr_at(src, 1, 1)
}

/// Parses `src` found at `line`, starting at column `col` (both 1-based),
/// so that error positions refer to the enclosing document.
pub fn parse_expr_at(src: &str, line: usize, col: usize) -> Result<Expr, ParseError> {
    let lexer = lex(src, line, col)?;
    let mut p = Parser {
        toks: lexer.toks,
        pos: 0,
        line,
        col0: col,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

/// Parses a comma-separated argument list `a, b, ...` (used for
/// constraint arguments).
pub fn parse_args_at(src: &str, line: usize, col: usize) -> Result<Vec<Expr>, ParseError> {
    let lexer = lex(src, line, col)?;
    let mut p = Parser {
        toks: lexer.toks,
        pos: 0,
        line,
        col0: col,
    };
    let mut args = vec![p.expr()?];
    while p.eat(',') {
        args.push(p.expr()?);
    }
    if *p.peek() != Tok::End {
        return Err(p.error(&["','", "operator", "')'"]));
    }
    Ok(args)
}
