use std::fmt;

use serde::{Serialize, Serializer};

use crate::jet::{Jet, JetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply_jet(self, a: &Jet) -> Result<Jet, JetError> {
        match self {
            Func::Exp => Ok(a.exp()),
            Func::Log => a.ln(),
            Func::Sin => Ok(a.sin()),
            Func::Cos => Ok(a.cos()),
            Func::Sinh => Ok(a.sinh()),
            Func::Cosh => Ok(a.cosh()),
            Func::Sqrt => a.sqrt(),
        }
    }

    fn apply_f64(self, a: f64) -> Result<f64, JetError> {
        let bad = |what: &str| JetError::Singular(format!("{what} of {a:e}"));
        Ok(match self {
            Func::Exp => a.exp(),
            Func::Log if a > 0.0 => a.ln(),
            Func::Log => return Err(bad("log")),
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Sinh => a.sinh(),
            Func::Cosh => a.cosh(),
            Func::Sqrt if a > 0.0 => a.sqrt(),
            Func::Sqrt => return Err(bad("sqrt")),
        })
    }
}

/// Expression tree over the chart coordinates.
///
/// Trees built by the parser only contain nonnegative constants; negation is
/// always an explicit [`Expr::Neg`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Func(Func, Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn is_const(&self, c: f64) -> bool {
        matches!(self, Expr::Const(v) if *v == c)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    /// Largest variable index plus one (0 for constant trees).
    pub fn var_bound(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.var_bound(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.var_bound().max(b.var_bound())
            }
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(i) => *i == var,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    /// Evaluates with the given coordinate jets standing in for the variables.
    pub fn eval_with(&self, vars: &[Jet]) -> Result<Jet, JetError> {
        let proto = &vars[0];
        Ok(match self {
            Expr::Const(c) => Jet::constant(*c, proto.order(), proto.nvars()),
            Expr::Var(i) => *vars.get(*i).ok_or(JetError::IndexOutOfRange {
                index: *i,
                nvars: vars.len(),
            })?,
            Expr::Neg(a) => -a.eval_with(vars)?,
            Expr::Add(a, b) => a.eval_with(vars)? + b.eval_with(vars)?,
            Expr::Sub(a, b) => a.eval_with(vars)? - b.eval_with(vars)?,
            Expr::Mul(a, b) => a.eval_with(vars)? * b.eval_with(vars)?,
            Expr::Div(a, b) => a.eval_with(vars)?.try_div(&b.eval_with(vars)?)?,
            Expr::Pow(a, n) => a.eval_with(vars)?.powi(*n)?,
            Expr::Func(f, a) => f.apply_jet(&a.eval_with(vars)?)?,
        })
    }

    /// Jet of the expression at `p` to the given order.
    pub fn eval_jet(&self, p: &[f64], order: usize) -> Result<Jet, JetError> {
        let vars = coordinate_jets(p, order)?;
        self.eval_with(&vars)
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64, JetError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *p.get(*i).ok_or(JetError::IndexOutOfRange {
                index: *i,
                nvars: p.len(),
            })?,
            Expr::Neg(a) => -a.eval(p)?,
            Expr::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Expr::Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Expr::Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Expr::Div(a, b) => {
                let d = b.eval(p)?;
                if d.abs() < crate::jet::SINGULAR_EPS {
                    return Err(JetError::Singular(format!("division by {d:e}")));
                }
                a.eval(p)? / d
            }
            Expr::Pow(a, n) => {
                let v = a.eval(p)?;
                if *n < 0 && v.abs() < crate::jet::SINGULAR_EPS {
                    return Err(JetError::Singular(format!("negative power of {v:e}")));
                }
                v.powi(*n)
            }
            Expr::Func(f, a) => f.apply_f64(a.eval(p)?)?,
        })
    }

    /// Replaces variable `i` by `subs[i]` wherever `subs[i]` is `Some`.
    pub fn substitute(&self, subs: &[Option<Expr>]) -> Expr {
        match self {
            Expr::Var(i) => match subs.get(*i) {
                Some(Some(e)) => e.clone(),
                _ => self.clone(),
            },
            Expr::Const(_) => self.clone(),
            Expr::Neg(a) => neg(a.substitute(subs)),
            Expr::Add(a, b) => add(a.substitute(subs), b.substitute(subs)),
            Expr::Sub(a, b) => sub(a.substitute(subs), b.substitute(subs)),
            Expr::Mul(a, b) => mul(a.substitute(subs), b.substitute(subs)),
            Expr::Div(a, b) => div(a.substitute(subs), b.substitute(subs)),
            Expr::Pow(a, n) => pow(a.substitute(subs), *n),
            Expr::Func(f, a) => func(*f, a.substitute(subs)),
        }
    }

    /// Renders with the given variable names; output reparses to the same tree.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

/// Coordinate jets `x_i` at `p`.
pub fn coordinate_jets(p: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
    (0..p.len())
        .map(|i| Jet::variable(i, p[i], order, p.len()))
        .collect()
}

// Builders with light constant folding, used to assemble derived metrics.

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) if c == 0.0 => a,
        Expr::Neg(inner) => *inner,
        _ => Expr::Neg(Box::new(a)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if x >= 0.0 && y >= 0.0 => Expr::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (_, Some(y)) if y == 0.0 => a,
        (Some(x), _) if x == 0.0 => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), _) if x == 0.0 => Expr::Const(0.0),
        (_, Some(y)) if y == 0.0 => Expr::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), Some(y)) => Expr::Const(x * y),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), _) if x == 0.0 => Expr::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow(a: Expr, n: i32) -> Expr {
    match n {
        1 => a,
        0 => Expr::Const(1.0),
        _ => Expr::Pow(Box::new(a), n),
    }
}

pub fn func(f: Func, a: Expr) -> Expr {
    Expr::Func(f, Box::new(a))
}

/// Scalar for arbitrary sign: negative values become an explicit negation.
pub fn real(c: f64) -> Expr {
    if c < 0.0 {
        Expr::Neg(Box::new(Expr::Const(-c)))
    } else {
        Expr::Const(c)
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c < 0.0 {
        // Not producible by the parser; emit something that still evaluates right.
        write!(f, "(-{:?})", -c)
    } else {
        write!(f, "{c:?}")
    }
}

impl<'a> fmt::Display for ExprDisplay<'a> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |e: &'a Expr| ExprDisplay { expr: e, names: self.names };
        match self.expr {
            Expr::Const(c) => write_const(f, *c),
            Expr::Var(i) => match self.names.get(*i) {
                Some(n) => write!(f, "{n}"),
                None => write!(f, "v{i}"),
            },
            Expr::Neg(a) => write!(f, "(-{})", sub(a)),
            Expr::Add(a, b) => write!(f, "({} + {})", sub(a), sub(b)),
            Expr::Sub(a, b) => write!(f, "({} - {})", sub(a), sub(b)),
            Expr::Mul(a, b) => write!(f, "({} * {})", sub(a), sub(b)),
            Expr::Div(a, b) => write!(f, "({} / {})", sub(a), sub(b)),
            Expr::Pow(a, n) => write!(f, "({})^{}", sub(a), n),
            Expr::Func(func, a) => write!(f, "{}({})", func.name(), sub(a)),
        }
    }
}

/// Serializes as text with generic variable names `v0, v1, ...`.
impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.display(&[]))
    }
}
