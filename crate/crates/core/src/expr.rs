//! Smooth scalar expressions: constants, named variables, field operations,
//! integer powers and the function symbols sin, cos, exp and the flat bump.
//!
//! Construction goes through the lowercase helper functions, which fold
//! constants and drop identities so that symbolic derivatives stay compact.
//! The parser uses the same helpers, so formatting and reparsing an
//! expression built here reproduces it structurally.

use crate::error::{Error, Result};
use crate::smooth;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Bump,
    /// m-th derivative of the bump, produced by differentiation; not part
    /// of the user-facing grammar but formatted as `bump_d<m>`.
    BumpDeriv(u32),
}

impl Func {
    pub fn name(&self) -> String {
        match self {
            Func::Sin => "sin".into(),
            Func::Cos => "cos".into(),
            Func::Exp => "exp".into(),
            Func::Bump => "bump".into(),
            Func::BumpDeriv(m) => format!("bump_d{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SmoothExpr {
    Const(f64),
    Var(String),
    Add(Box<SmoothExpr>, Box<SmoothExpr>),
    Sub(Box<SmoothExpr>, Box<SmoothExpr>),
    Mul(Box<SmoothExpr>, Box<SmoothExpr>),
    Div(Box<SmoothExpr>, Box<SmoothExpr>),
    Pow(Box<SmoothExpr>, u32),
    Neg(Box<SmoothExpr>),
    Apply(Func, Box<SmoothExpr>),
}

use SmoothExpr::*;

pub fn konst(c: f64) -> SmoothExpr {
    Const(c)
}

pub fn var(name: &str) -> SmoothExpr {
    Var(name.to_string())
}

pub fn add(a: SmoothExpr, b: SmoothExpr) -> SmoothExpr {
    match (a, b) {
        (Const(x), Const(y)) => Const(x + y),
        (Const(x), b) if x == 0.0 => b,
        (a, Const(y)) if y == 0.0 => a,
        (a, b) => Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: SmoothExpr, b: SmoothExpr) -> SmoothExpr {
    match (a, b) {
        (Const(x), Const(y)) => Const(x - y),
        (a, Const(y)) if y == 0.0 => a,
        (Const(x), b) if x == 0.0 => neg(b),
        (a, b) if a == b => Const(0.0),
        (a, b) => Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: SmoothExpr, b: SmoothExpr) -> SmoothExpr {
    match (a, b) {
        (Const(x), Const(y)) => Const(x * y),
        (Const(x), _) | (_, Const(x)) if x == 0.0 => Const(0.0),
        (Const(x), b) if x == 1.0 => b,
        (a, Const(y)) if y == 1.0 => a,
        (a, b) => Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: SmoothExpr, b: SmoothExpr) -> SmoothExpr {
    match (a, b) {
        (Const(x), Const(y)) if y != 0.0 => Const(x / y),
        (a, Const(y)) if y == 1.0 => a,
        (a, b) => Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow(e: SmoothExpr, n: u32) -> SmoothExpr {
    match (e, n) {
        (_, 0) => Const(1.0),
        (e, 1) => e,
        (Const(x), n) => Const(x.powi(n as i32)),
        (e, n) => Pow(Box::new(e), n),
    }
}

pub fn neg(e: SmoothExpr) -> SmoothExpr {
    match e {
        Const(x) => Const(-x),
        Neg(inner) => *inner,
        e => Neg(Box::new(e)),
    }
}

pub fn apply(f: Func, e: SmoothExpr) -> SmoothExpr {
    Apply(f, Box::new(e))
}

impl SmoothExpr {
    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Const(_) => false,
            Var(v) => v == name,
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                a.contains_var(name) || b.contains_var(name)
            }
            Pow(a, _) | Neg(a) | Apply(_, a) => a.contains_var(name),
        }
    }

    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Const(_) => {}
            Var(v) => {
                if !out.iter().any(|x| x == v) {
                    out.push(v.clone());
                }
            }
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Pow(a, _) | Neg(a) | Apply(_, a) => a.collect_vars(out),
        }
    }

    /// Replace every occurrence of `name` by `replacement`, re-simplifying.
    pub fn substitute(&self, name: &str, replacement: &SmoothExpr) -> SmoothExpr {
        match self {
            Const(c) => Const(*c),
            Var(v) => {
                if v == name {
                    replacement.clone()
                } else {
                    Var(v.clone())
                }
            }
            Add(a, b) => add(a.substitute(name, replacement), b.substitute(name, replacement)),
            Sub(a, b) => sub(a.substitute(name, replacement), b.substitute(name, replacement)),
            Mul(a, b) => mul(a.substitute(name, replacement), b.substitute(name, replacement)),
            Div(a, b) => div(a.substitute(name, replacement), b.substitute(name, replacement)),
            Pow(a, n) => pow(a.substitute(name, replacement), *n),
            Neg(a) => neg(a.substitute(name, replacement)),
            Apply(f, a) => apply(*f, a.substitute(name, replacement)),
        }
    }

    /// Evaluate at a point given by a variable environment.
    pub fn eval_scalar(&self, env: &[(&str, f64)]) -> Result<f64> {
        match self {
            Const(c) => Ok(*c),
            Var(v) => env
                .iter()
                .find(|(n, _)| n == v)
                .map(|(_, x)| *x)
                .ok_or_else(|| Error::UnknownVariable { name: v.clone() }),
            Add(a, b) => Ok(a.eval_scalar(env)? + b.eval_scalar(env)?),
            Sub(a, b) => Ok(a.eval_scalar(env)? - b.eval_scalar(env)?),
            Mul(a, b) => Ok(a.eval_scalar(env)? * b.eval_scalar(env)?),
            Div(a, b) => {
                let d = b.eval_scalar(env)?;
                if d == 0.0 {
                    return Err(Error::ZeroDenominator {
                        expr: self.to_string(),
                        point: a.eval_scalar(env).unwrap_or(f64::NAN),
                    });
                }
                Ok(a.eval_scalar(env)? / d)
            }
            Pow(a, n) => Ok(a.eval_scalar(env)?.powi(*n as i32)),
            Neg(a) => Ok(-a.eval_scalar(env)?),
            Apply(f, a) => {
                let x = a.eval_scalar(env)?;
                Ok(match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Bump => smooth::bump_value(x),
                    Func::BumpDeriv(m) => smooth::bump_deriv_value(*m, x),
                })
            }
        }
    }

    pub fn diff_symbolic(&self, name: &str) -> SmoothExpr {
        diff_symbolic(self, name)
    }

    pub fn diff_symbolic_n(&self, name: &str, l: usize) -> SmoothExpr {
        diff_symbolic_n(self, name, l)
    }
}

/// Symbolic derivative with respect to `name`. The bump differentiates to
/// its dedicated derivative symbol, everything else by the textbook rules.
pub fn diff_symbolic(e: &SmoothExpr, name: &str) -> SmoothExpr {
    match e {
        Const(_) => Const(0.0),
        Var(v) => Const(if v == name { 1.0 } else { 0.0 }),
        Add(a, b) => add(diff_symbolic(a, name), diff_symbolic(b, name)),
        Sub(a, b) => sub(diff_symbolic(a, name), diff_symbolic(b, name)),
        Mul(a, b) => add(
            mul(diff_symbolic(a, name), (**b).clone()),
            mul((**a).clone(), diff_symbolic(b, name)),
        ),
        Div(a, b) => div(
            sub(
                mul(diff_symbolic(a, name), (**b).clone()),
                mul((**a).clone(), diff_symbolic(b, name)),
            ),
            pow((**b).clone(), 2),
        ),
        Pow(a, n) => mul(
            mul(Const(*n as f64), pow((**a).clone(), n - 1)),
            diff_symbolic(a, name),
        ),
        Neg(a) => neg(diff_symbolic(a, name)),
        Apply(f, a) => {
            let outer = match f {
                Func::Sin => apply(Func::Cos, (**a).clone()),
                Func::Cos => neg(apply(Func::Sin, (**a).clone())),
                Func::Exp => apply(Func::Exp, (**a).clone()),
                Func::Bump => apply(Func::BumpDeriv(1), (**a).clone()),
                Func::BumpDeriv(m) => apply(Func::BumpDeriv(m + 1), (**a).clone()),
            };
            mul(outer, diff_symbolic(a, name))
        }
    }
}

/// l-fold symbolic derivative.
pub fn diff_symbolic_n(e: &SmoothExpr, name: &str, l: usize) -> SmoothExpr {
    let mut acc = e.clone();
    for _ in 0..l {
        acc = diff_symbolic(&acc, name);
    }
    acc
}

// Printing priorities: sums 1, products 2, unary minus 3, powers 4, atoms 5.
// A negative literal prints with a leading minus, so it counts as level 3.
fn prec(e: &SmoothExpr) -> u8 {
    match e {
        Const(c) if *c < 0.0 => 3,
        Const(_) | Var(_) | Apply(..) => 5,
        Pow(..) => 4,
        Neg(_) => 3,
        Mul(..) | Div(..) => 2,
        Add(..) | Sub(..) => 1,
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, child: &SmoothExpr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for SmoothExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(c) => write!(f, "{c}"),
            Var(v) => write!(f, "{v}"),
            Add(a, b) => {
                fmt_child(f, a, prec(a) < 1)?;
                write!(f, " + ")?;
                fmt_child(f, b, prec(b) <= 1)
            }
            Sub(a, b) => {
                fmt_child(f, a, prec(a) < 1)?;
                write!(f, " - ")?;
                fmt_child(f, b, prec(b) <= 1)
            }
            Mul(a, b) => {
                fmt_child(f, a, prec(a) < 2)?;
                write!(f, " * ")?;
                fmt_child(f, b, prec(b) <= 2)
            }
            Div(a, b) => {
                fmt_child(f, a, prec(a) < 2)?;
                write!(f, " / ")?;
                fmt_child(f, b, prec(b) <= 2)
            }
            Pow(a, n) => {
                fmt_child(f, a, prec(a) < 5)?;
                write!(f, "^{n}")
            }
            Neg(a) => {
                write!(f, "-")?;
                fmt_child(f, a, prec(a) < 3)
            }
            Apply(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
