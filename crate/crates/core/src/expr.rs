//! Arithmetic expression language for user-supplied nonlinearities.
//!
//! Problems are specified by three formulas over the variables `t` and `x`:
//! the restoring force `g(t, x)`, its x-derivative `gx(t, x)`, and the
//! forcing `h(t)`. The grammar is deliberately tiny:
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := unary ("^" factor)?
//! unary  := "-" unary | atom
//! atom   := number | "pi" | "t" | "x" | func "(" expr ")" | "(" expr ")"
//! func   := sin | cos | tan | exp | ln | sqrt | abs | atan | tanh
//! ```
//!
//! `^` is right-associative. Numbers are unsigned decimals with optional
//! fraction and exponent; `pi` is a reserved constant folded at parse time.
//! Evaluation that leaves the reals (division by zero, `ln` of a
//! non-positive value, ...) is a hard [`DomainError`], never a silent NaN:
//! a NaN that slips into monodromy integration corrupts every downstream
//! stability verdict invisibly.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};

use crate::math;

const MAX_NESTING: u32 = 256;

/// Variables the language knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Time `t`.
    T,
    /// Position `x`.
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Atan,
    Tanh,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
            UnaryOp::Atan => "atan",
            UnaryOp::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
            BinaryOp::Pow => "pow",
        }
    }
}

/// Immutable expression tree. Evaluation is pure and reentrant, so shared
/// references may be evaluated concurrently.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

/// Parse failure, with the byte offset where it happened.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseError {
    /// Unexpected input; `expected` describes what the parser wanted.
    Syntax { offset: usize, expected: &'static str },
    /// Identifier outside the variable/function/constant set.
    UnknownIdentifier { offset: usize, name: String },
}

impl core::fmt::Display for ParseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ParseError::Syntax { offset, expected } => {
                write!(f, "syntax error at byte {offset}: expected {expected}")
            }
            ParseError::UnknownIdentifier { offset, name } => {
                write!(f, "unknown identifier `{name}` at byte {offset}")
            }
        }
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    LogNonPositive,
    SqrtOfNegative,
    FractionalPowerOfNegative,
    ZeroToNegativePower,
    Overflow,
}

/// Evaluation left the reals. Carries the offending node and its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainError {
    pub kind: DomainErrorKind,
    /// Name of the node that failed (`"div"`, `"ln"`, ...).
    pub op: &'static str,
    /// Operand values at the failing node (second is `None` for unary ops).
    pub args: (f64, Option<f64>),
}

impl core::fmt::Display for DomainError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let (a, b) = self.args;
        match self.kind {
            DomainErrorKind::DivisionByZero => write!(f, "division of {a} by zero"),
            DomainErrorKind::LogNonPositive => write!(f, "ln of non-positive value {a}"),
            DomainErrorKind::SqrtOfNegative => write!(f, "sqrt of negative value {a}"),
            DomainErrorKind::FractionalPowerOfNegative => {
                write!(f, "non-integer power {} of negative base {a}", b.unwrap_or(f64::NAN))
            }
            DomainErrorKind::ZeroToNegativePower => {
                write!(f, "zero raised to negative power {}", b.unwrap_or(f64::NAN))
            }
            DomainErrorKind::Overflow => match b {
                Some(b) => write!(f, "non-finite result in {}({a}, {b})", self.op),
                None => write!(f, "non-finite result in {}({a})", self.op),
            },
        }
    }
}

impl core::error::Error for DomainError {}

impl Expr {
    /// Evaluates the tree at `(t, x)` under standard real arithmetic.
    pub fn eval(&self, t: f64, x: f64) -> Result<f64, DomainError> {
        match self {
            Expr::Constant(c) => Ok(*c),
            Expr::Var(Var::T) => Ok(t),
            Expr::Var(Var::X) => Ok(x),
            Expr::Unary(op, child) => {
                let a = child.eval(t, x)?;
                let value = match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Sin => math::sin(a),
                    UnaryOp::Cos => math::cos(a),
                    UnaryOp::Tan => math::tan(a),
                    UnaryOp::Exp => math::exp(a),
                    UnaryOp::Ln => {
                        if a <= 0.0 {
                            return Err(DomainError {
                                kind: DomainErrorKind::LogNonPositive,
                                op: "ln",
                                args: (a, None),
                            });
                        }
                        math::ln(a)
                    }
                    UnaryOp::Sqrt => {
                        if a < 0.0 {
                            return Err(DomainError {
                                kind: DomainErrorKind::SqrtOfNegative,
                                op: "sqrt",
                                args: (a, None),
                            });
                        }
                        math::sqrt(a)
                    }
                    UnaryOp::Abs => math::abs(a),
                    UnaryOp::Atan => math::atan(a),
                    UnaryOp::Tanh => math::tanh(a),
                };
                finite_or_overflow(value, op.name(), (a, None))
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval(t, x)?;
                let b = rhs.eval(t, x)?;
                let value = match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(DomainError {
                                kind: DomainErrorKind::DivisionByZero,
                                op: "div",
                                args: (a, Some(b)),
                            });
                        }
                        a / b
                    }
                    BinaryOp::Pow => pow_real(a, b)?,
                };
                finite_or_overflow(value, op.name(), (a, Some(b)))
            }
        }
    }

    /// True if any `t` node occurs in the tree.
    pub fn uses_time(&self) -> bool {
        self.uses_var(Var::T)
    }

    /// True if any `x` node occurs in the tree.
    pub fn uses_state(&self) -> bool {
        self.uses_var(Var::X)
    }

    fn uses_var(&self, v: Var) -> bool {
        match self {
            Expr::Constant(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Unary(_, child) => child.uses_var(v),
            Expr::Binary(_, lhs, rhs) => lhs.uses_var(v) || rhs.uses_var(v),
        }
    }

    /// Renders the tree back to source that reparses to an equal tree.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        self.write_source(&mut out, 1);
        out
    }

    // Precedence ladder: 1 sum, 2 product, 3 power, 4 unary minus, 5 atom.
    // `min_prec` is the loosest level the grammar admits in this position.
    fn write_source(&self, out: &mut String, min_prec: u8) {
        let prec = match self {
            Expr::Constant(_) | Expr::Var(_) => 5,
            Expr::Unary(UnaryOp::Neg, _) => 4,
            Expr::Unary(..) => 5,
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Expr::Binary(BinaryOp::Pow, ..) => 3,
        };
        let parens = prec < min_prec;
        if parens {
            out.push('(');
        }
        match self {
            Expr::Constant(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    // Negative literals are not in the grammar; emit a
                    // unary minus (reparses to an equal value, not an
                    // equal tree, and never arises from `parse`).
                    out.push('-');
                    out.push_str(&format!("{}", -*c));
                } else {
                    out.push_str(&format!("{c}"));
                }
            }
            Expr::Var(Var::T) => out.push('t'),
            Expr::Var(Var::X) => out.push('x'),
            Expr::Unary(UnaryOp::Neg, child) => {
                out.push('-');
                child.write_source(out, 4);
            }
            Expr::Unary(op, child) => {
                out.push_str(op.name());
                out.push('(');
                child.write_source(out, 1);
                out.push(')');
            }
            Expr::Binary(op, lhs, rhs) => {
                let (sym, lp, rp) = match op {
                    BinaryOp::Add => ('+', 1, 2),
                    BinaryOp::Sub => ('-', 1, 2),
                    BinaryOp::Mul => ('*', 2, 3),
                    BinaryOp::Div => ('/', 2, 3),
                    // Power base must be a unary per the grammar; the
                    // exponent chains right-associatively.
                    BinaryOp::Pow => ('^', 4, 3),
                };
                lhs.write_source(out, lp);
                out.push(sym);
                rhs.write_source(out, rp);
            }
        }
        if parens {
            out.push(')');
        }
    }
}

fn finite_or_overflow(
    value: f64,
    op: &'static str,
    args: (f64, Option<f64>),
) -> Result<f64, DomainError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(DomainError {
            kind: DomainErrorKind::Overflow,
            op,
            args,
        })
    }
}

fn pow_real(base: f64, exponent: f64) -> Result<f64, DomainError> {
    if base > 0.0 {
        return Ok(math::pow(base, exponent));
    }
    if base == 0.0 {
        return if exponent > 0.0 {
            Ok(0.0)
        } else if exponent == 0.0 {
            Ok(1.0)
        } else {
            Err(DomainError {
                kind: DomainErrorKind::ZeroToNegativePower,
                op: "pow",
                args: (base, Some(exponent)),
            })
        };
    }
    // Negative base: only integer exponents stay real.
    if exponent == math::trunc(exponent) {
        Ok(math::pow(base, exponent))
    } else {
        Err(DomainError {
            kind: DomainErrorKind::FractionalPowerOfNegative,
            op: "pow",
            args: (base, Some(exponent)),
        })
    }
}

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        src: source.as_bytes(),
        pos: 0,
        depth: 0,
    };
    parser.skip_ws();
    let expr = parser.parse_expr()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(ParseError::Syntax {
            offset: parser.pos,
            expected: "end of input or an operator",
        });
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: u32,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(b) = self.peek() {
            if b == b' ' || b == b'\t' || b == b'\r' || b == b'\n' {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            Err(ParseError::Syntax {
                offset: self.pos,
                expected: "less deeply nested expression",
            })
        } else {
            Ok(())
        }
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn expect(&mut self, byte: u8, expected: &'static str) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset: self.pos,
                expected,
            })
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.parse_term()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'+') => BinaryOp::Add,
                Some(b'-') => BinaryOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.parse_term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.leave();
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_factor()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'*') => BinaryOp::Mul,
                Some(b'/') => BinaryOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.parse_factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_factor(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let base = self.parse_unary()?;
        self.skip_ws();
        let result = if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.parse_factor()?;
            Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent))
        } else {
            base
        };
        self.leave();
        Ok(result)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        self.skip_ws();
        let result = if self.peek() == Some(b'-') {
            self.pos += 1;
            let child = self.parse_unary()?;
            Expr::Unary(UnaryOp::Neg, Box::new(child))
        } else {
            self.parse_atom()?
        };
        self.leave();
        Ok(result)
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                self.expect(b')', "\")\"")?;
                Ok(inner)
            }
            Some(b) if b.is_ascii_digit() => self.parse_number(),
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => self.parse_identifier(),
            _ => Err(ParseError::Syntax {
                offset: self.pos,
                expected: "a number, `pi`, `t`, `x`, a function name, or \"(\"",
            }),
        }
    }

    fn parse_number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            if !self.peek().is_some_and(|b| b.is_ascii_digit()) {
                return Err(ParseError::Syntax {
                    offset: self.pos,
                    expected: "a digit after the decimal point",
                });
            }
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if !self.peek().is_some_and(|b| b.is_ascii_digit()) {
                return Err(ParseError::Syntax {
                    offset: self.pos,
                    expected: "a digit in the exponent",
                });
            }
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(value) if value.is_finite() => Ok(Expr::Constant(value)),
            _ => Err(ParseError::Syntax {
                offset: start,
                expected: "a representable number",
            }),
        }
    }

    fn parse_identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match name {
            "pi" => Ok(Expr::Constant(core::f64::consts::PI)),
            "t" => Ok(Expr::Var(Var::T)),
            "x" => Ok(Expr::Var(Var::X)),
            _ => {
                let op = match name {
                    "sin" => UnaryOp::Sin,
                    "cos" => UnaryOp::Cos,
                    "tan" => UnaryOp::Tan,
                    "exp" => UnaryOp::Exp,
                    "ln" => UnaryOp::Ln,
                    "sqrt" => UnaryOp::Sqrt,
                    "abs" => UnaryOp::Abs,
                    "atan" => UnaryOp::Atan,
                    "tanh" => UnaryOp::Tanh,
                    _ => {
                        return Err(ParseError::UnknownIdentifier {
                            offset: start,
                            name: name.to_string(),
                        })
                    }
                };
                self.expect(b'(', "\"(\"")?;
                let arg = self.parse_expr()?;
                self.expect(b')', "\")\"")?;
                Ok(Expr::Unary(op, Box::new(arg)))
            }
        }
    }
}

/// Outcome of comparing a claimed derivative against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// Largest |gx - (g(x+d) - g(x-d)) / 2d| over the grid.
    pub max_mismatch: f64,
    /// `(t, x)` where the largest mismatch occurred.
    pub worst_point: (f64, f64),
    pub tolerance: f64,
    pub passed: bool,
}

/// A [`DomainError`] tagged with the sample point that triggered it.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDomainError {
    pub t: f64,
    pub x: f64,
    pub source: DomainError,
}

impl core::fmt::Display for PointDomainError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} at sample (t = {}, x = {})", self.source, self.t, self.x)
    }
}

impl core::error::Error for PointDomainError {}

/// Checks a user-supplied `gx` against a central finite difference of `g`
/// on the cartesian grid `t_points x x_points`. The step is
/// `d = max(1e-6, 1e-6 |x|)`. Passes iff the mismatch stays within `tol`
/// at every grid point.
pub fn check_derivative(
    g: &Expr,
    gx: &Expr,
    t_points: &[f64],
    x_points: &[f64],
    tol: f64,
) -> Result<ConsistencyReport, PointDomainError> {
    debug_assert!(tol > 0.0);
    let mut max_mismatch = 0.0f64;
    let mut worst_point = (f64::NAN, f64::NAN);
    for &t in t_points {
        for &x in x_points {
            let delta = 1e-6f64.max(1e-6 * math::abs(x));
            let tag = |source: DomainError| PointDomainError { t, x, source };
            let plus = g.eval(t, x + delta).map_err(tag)?;
            let minus = g.eval(t, x - delta).map_err(tag)?;
            let claimed = gx.eval(t, x).map_err(tag)?;
            let mismatch = math::abs(claimed - (plus - minus) / (2.0 * delta));
            if mismatch > max_mismatch || worst_point.0.is_nan() {
                max_mismatch = mismatch;
                worst_point = (t, x);
            }
        }
    }
    Ok(ConsistencyReport {
        max_mismatch,
        worst_point,
        tolerance: tol,
        passed: max_mismatch <= tol,
    })
}
