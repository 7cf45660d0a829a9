//! Expression language for regular parts of distributions and test functions.
//!
//! The grammar is deliberately small: arithmetic, a handful of elementary
//! functions, interval indicators `chi(a,b)`, and the compactly supported
//! smooth core `bump(t)` = exp(-1/(1-t^2)) for |t| < 1, 0 otherwise.
//! Evaluation is total: domain errors produce an "undefined" marker (NaN)
//! rather than aborting, so quadrature can subdivide away from bad points.

mod diff;
mod parse;
mod singular;

pub use diff::DiffError;
pub use parse::{parse, ParseError};
pub use singular::{singularities, SingularKind, SingularPoint};

use std::fmt;

/// Variables the language knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    R,
    N,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::R => "r",
            Var::N => "n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Arctan,
    Abs,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Immutable expression tree. Values are shared by clone; nodes are never
/// mutated after construction, so `Expr` is safe to use across threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// Characteristic function of the open interval (lo, hi), applied to
    /// `arg`. Both endpoints evaluate to 0 (open-interval convention; a set
    /// of measure zero never matters for a pairing). The parser always
    /// produces `arg = x`; other arguments arise from substitution.
    Indicator { lo: f64, hi: f64, arg: Box<Expr> },
    /// Guarded pieces (lo, hi, expr); the guard tests the ambient variable x.
    /// Outside every guard the value is 0. Built programmatically only.
    Piecewise(Vec<(f64, f64, Expr)>),
    /// exp(-1/(1-t^2)) for |t| < 1, exactly 0 otherwise.
    BumpCore(Box<Expr>),
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub r: Option<f64>,
    pub n: Option<f64>,
}

impl Env {
    pub fn x(v: f64) -> Env {
        Env { x: Some(v), ..Env::default() }
    }

    pub fn xy(x: f64, y: f64) -> Env {
        Env { x: Some(x), y: Some(y), ..Env::default() }
    }

    pub fn n(v: f64) -> Env {
        Env { n: Some(v), ..Env::default() }
    }

    /// Binds x and r to the same value; radial profiles may be written in
    /// either variable.
    pub fn radial(v: f64) -> Env {
        Env { x: Some(v), r: Some(v), ..Env::default() }
    }

    fn get(&self, v: Var) -> Option<f64> {
        match v {
            Var::X => self.x,
            Var::Y => self.y,
            Var::R => self.r,
            Var::N => self.n,
        }
    }
}

/// A variable occurred that the environment does not bind. Distinct from the
/// "undefined" marker: unbound is a caller bug, undefined is a domain hole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unbound variable `{}`", .0.name())]
pub struct UnboundVar(pub Var);

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn neg(self) -> Expr {
        Expr::Unary(UnaryOp::Neg, Box::new(self))
    }

    pub fn sin(self) -> Expr {
        Expr::Unary(UnaryOp::Sin, Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Unary(UnaryOp::Cos, Box::new(self))
    }

    pub fn exp(self) -> Expr {
        Expr::Unary(UnaryOp::Exp, Box::new(self))
    }

    pub fn ln(self) -> Expr {
        Expr::Unary(UnaryOp::Ln, Box::new(self))
    }

    pub fn abs(self) -> Expr {
        Expr::Unary(UnaryOp::Abs, Box::new(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Unary(UnaryOp::Sqrt, Box::new(self))
    }

    pub fn add(self, rhs: Expr) -> Expr {
        Expr::Binary(BinaryOp::Add, Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: Expr) -> Expr {
        Expr::Binary(BinaryOp::Sub, Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: Expr) -> Expr {
        Expr::Binary(BinaryOp::Mul, Box::new(self), Box::new(rhs))
    }

    pub fn div(self, rhs: Expr) -> Expr {
        Expr::Binary(BinaryOp::Div, Box::new(self), Box::new(rhs))
    }

    pub fn pow(self, rhs: Expr) -> Expr {
        Expr::Binary(BinaryOp::Pow, Box::new(self), Box::new(rhs))
    }

    pub fn bump(self) -> Expr {
        Expr::BumpCore(Box::new(self))
    }

    pub fn chi(lo: f64, hi: f64) -> Expr {
        Expr::Indicator { lo, hi, arg: Box::new(Expr::Var(Var::X)) }
    }

    pub fn scale(self, c: f64) -> Expr {
        Expr::Const(c).mul(self)
    }

    /// Evaluates under `env`. Domain errors (division by zero, ln of a
    /// non-positive number, fractional power of a negative base) yield NaN,
    /// the undefined marker, which propagates through every operation.
    pub fn eval(&self, env: &Env) -> Result<f64, UnboundVar> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(v) => env.get(*v).ok_or(UnboundVar(*v)),
            Expr::Unary(op, a) => {
                let a = a.eval(env)?;
                Ok(match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Ln => {
                        if a > 0.0 {
                            a.ln()
                        } else {
                            f64::NAN
                        }
                    }
                    UnaryOp::Arctan => a.atan(),
                    UnaryOp::Abs => a.abs(),
                    UnaryOp::Sqrt => {
                        if a >= 0.0 {
                            a.sqrt()
                        } else {
                            f64::NAN
                        }
                    }
                })
            }
            Expr::Binary(op, a, b) => {
                let a = a.eval(env)?;
                let b = b.eval(env)?;
                Ok(match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            f64::NAN
                        } else {
                            a / b
                        }
                    }
                    BinaryOp::Pow => eval_pow(a, b),
                })
            }
            Expr::Indicator { lo, hi, arg } => {
                let t = arg.eval(env)?;
                if t.is_nan() {
                    Ok(f64::NAN)
                } else if t > *lo && t < *hi {
                    Ok(1.0)
                } else {
                    Ok(0.0)
                }
            }
            Expr::Piecewise(pieces) => {
                let x = env.get(Var::X).ok_or(UnboundVar(Var::X))?;
                if x.is_nan() {
                    return Ok(f64::NAN);
                }
                for (lo, hi, e) in pieces {
                    if x > *lo && x < *hi {
                        return e.eval(env);
                    }
                }
                Ok(0.0)
            }
            Expr::BumpCore(t) => {
                let t = t.eval(env)?;
                Ok(bump_core(t))
            }
        }
    }

    /// Substitutes `replacement` for every occurrence of `var`. Piecewise
    /// guards keep testing the ambient x; test functions never contain
    /// piecewise nodes so affine pullbacks are unaffected.
    pub fn substitute(&self, var: Var, replacement: &Expr) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => {
                if *v == var {
                    replacement.clone()
                } else {
                    self.clone()
                }
            }
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.substitute(var, replacement))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.substitute(var, replacement)),
                Box::new(b.substitute(var, replacement)),
            ),
            Expr::Indicator { lo, hi, arg } => Expr::Indicator {
                lo: *lo,
                hi: *hi,
                arg: Box::new(arg.substitute(var, replacement)),
            },
            Expr::Piecewise(pieces) => Expr::Piecewise(
                pieces
                    .iter()
                    .map(|(lo, hi, e)| (*lo, *hi, e.substitute(var, replacement)))
                    .collect(),
            ),
            Expr::BumpCore(t) => Expr::BumpCore(Box::new(t.substitute(var, replacement))),
        }
    }

    /// Simultaneous substitution of x and y (rotations need both at once).
    pub fn substitute_xy(&self, for_x: &Expr, for_y: &Expr) -> Expr {
        // Route through a temporary variable so `for_x` containing y does not
        // get rewritten by the second pass.
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(Var::X) => for_x.clone(),
            Expr::Var(Var::Y) => for_y.clone(),
            Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.substitute_xy(for_x, for_y))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.substitute_xy(for_x, for_y)),
                Box::new(b.substitute_xy(for_x, for_y)),
            ),
            Expr::Indicator { lo, hi, arg } => Expr::Indicator {
                lo: *lo,
                hi: *hi,
                arg: Box::new(arg.substitute_xy(for_x, for_y)),
            },
            Expr::Piecewise(pieces) => Expr::Piecewise(
                pieces
                    .iter()
                    .map(|(lo, hi, e)| (*lo, *hi, e.substitute_xy(for_x, for_y)))
                    .collect(),
            ),
            Expr::BumpCore(t) => Expr::BumpCore(Box::new(t.substitute_xy(for_x, for_y))),
        }
    }

    /// Symbolic derivative with respect to `var`; see [`diff`].
    pub fn differentiate(&self, var: Var) -> Result<Expr, DiffError> {
        diff::differentiate(self, var)
    }

    pub fn contains_var(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Unary(_, a) | Expr::BumpCore(a) => a.contains_var(var),
            Expr::Binary(_, a, b) => a.contains_var(var) || b.contains_var(var),
            Expr::Indicator { arg, .. } => arg.contains_var(var),
            Expr::Piecewise(pieces) => {
                var == Var::X || pieces.iter().any(|(_, _, e)| e.contains_var(var))
            }
        }
    }
}

fn eval_pow(base: f64, exponent: f64) -> f64 {
    if base.is_nan() || exponent.is_nan() {
        return f64::NAN;
    }
    if exponent.fract() == 0.0 && exponent.abs() < 1e9 {
        let k = exponent as i32;
        if base == 0.0 && k < 0 {
            return f64::NAN;
        }
        return base.powi(k);
    }
    if base < 0.0 {
        return f64::NAN;
    }
    base.powf(exponent)
}

/// exp(-1/(1-t^2)) on |t| < 1, exactly 0 outside. The comparison guarantees
/// no underflow artifact at the support boundary.
pub fn bump_core(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.abs() >= 1.0 {
        return 0.0;
    }
    (-1.0 / (1.0 - t * t)).exp()
}

// Fully parenthesized printing so parse(print(e)) round-trips for every
// parseable expression. Piecewise and non-x indicators are programmatic-only
// and render in a debug-ish form.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "(0-{})", fmt_f64(-*c))
                } else {
                    write!(f, "{}", fmt_f64(*c))
                }
            }
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Unary(op, a) => match op {
                UnaryOp::Neg => write!(f, "(-({a}))"),
                UnaryOp::Sin => write!(f, "sin({a})"),
                UnaryOp::Cos => write!(f, "cos({a})"),
                UnaryOp::Exp => write!(f, "exp({a})"),
                UnaryOp::Ln => write!(f, "ln({a})"),
                UnaryOp::Arctan => write!(f, "arctan({a})"),
                UnaryOp::Abs => write!(f, "abs({a})"),
                UnaryOp::Sqrt => write!(f, "sqrt({a})"),
            },
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                    BinaryOp::Pow => "^",
                };
                write!(f, "(({a}){sym}({b}))")
            }
            Expr::Indicator { lo, hi, arg } => {
                if **arg == Expr::Var(Var::X) {
                    write!(f, "chi({},{})", fmt_f64(*lo), fmt_f64(*hi))
                } else {
                    write!(f, "chi[{},{}]({arg})", fmt_f64(*lo), fmt_f64(*hi))
                }
            }
            Expr::Piecewise(pieces) => {
                write!(f, "piecewise[")?;
                for (i, (lo, hi, e)) in pieces.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "({},{}): {e}", fmt_f64(*lo), fmt_f64(*hi))?;
                }
                write!(f, "]")
            }
            Expr::BumpCore(t) => write!(f, "bump({t})"),
        }
    }
}

// JSON carries expressions as grammar strings.
impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let text = <String as serde::Deserialize>::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

fn fmt_f64(v: f64) -> String {
    // Shortest representation that round-trips through the parser.
    let s = format!("{v}");
    if s.contains('e') || s.contains("inf") || s.contains("NaN") {
        format!("{v:.17}")
    } else {
        s
    }
}
