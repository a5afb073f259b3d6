//! Functions on the cylinder Q = [0,1] x R, 1-periodic in the second
//! variable, closed under two characteristic operators: S shifts a
//! circle function along the diagonal flow, S(x)(t, eta) = x(eta - t),
//! and I integrates along the same characteristics, I(v)(t, eta) =
//! integral of v(tau, eta - t + tau) over tau in [0, t]. Both carry
//! their differentiation rules on the node, which makes the identity
//! (d1 + d2) o I = id a consequence of constructor folds rather than a
//! numerical fact. On top of these live the characteristic form of a
//! semilinear transport operator, its directional derivative, the pair
//! seminorms, and a demonstration that the derivative grows like
//! delta^{-1/2} under bump perturbations that vanish in the seminorm.

use crate::error::{Error, Result};
use crate::expr::{Func, SmoothExpr};
use crate::quad;
use crate::seminorm::{golden_max, seminorm_sup, GridCfg};
use crate::smooth::{self, PeriodicFn};
use serde::Serialize;
use std::fmt;

use CylExpr::*;

/// Expression tree over (t, eta). `Shift` and `Integral` are the
/// operator nodes; `Supported` asserts that the value vanishes whenever
/// t lies outside the carried interval, letting the integral restrict
/// its range.
#[derive(Debug, Clone, PartialEq)]
pub enum CylExpr {
    Const(f64),
    T,
    Eta,
    Add(Box<CylExpr>, Box<CylExpr>),
    Sub(Box<CylExpr>, Box<CylExpr>),
    Mul(Box<CylExpr>, Box<CylExpr>),
    Div(Box<CylExpr>, Box<CylExpr>),
    Pow(Box<CylExpr>, u32),
    Neg(Box<CylExpr>),
    Apply(Func, Box<CylExpr>),
    Shift(PeriodicFn),
    Integral(Box<CylExpr>),
    Supported(Box<CylExpr>, f64, f64),
}

pub fn cyl_konst(c: f64) -> CylExpr {
    Const(c)
}

pub fn cyl_add(a: CylExpr, b: CylExpr) -> CylExpr {
    match (a, b) {
        (Const(x), Const(y)) => Const(x + y),
        (Const(x), b) if x == 0.0 => b,
        (a, Const(y)) if y == 0.0 => a,
        // (p - q) + q = p and q + (p - q) = p keep the characteristic
        // integral's derivative exact: (v - I(d2 v)) + I(d2 v) = v
        (Sub(p, q), b) if *q == b => *p,
        (a, Sub(p, q)) if *q == a => *p,
        (Neg(p), b) if *p == b => Const(0.0),
        (a, Neg(p)) if *p == a => Const(0.0),
        (a, b) => Add(Box::new(a), Box::new(b)),
    }
}

pub fn cyl_sub(a: CylExpr, b: CylExpr) -> CylExpr {
    match (a, b) {
        (a, b) if a == b => Const(0.0),
        (Const(x), Const(y)) => Const(x - y),
        (a, Const(y)) if y == 0.0 => a,
        (Const(x), b) if x == 0.0 => cyl_neg(b),
        // (p - q) - p = -q
        (Sub(p, q), b) if *p == b => cyl_neg(*q),
        (a, b) => Sub(Box::new(a), Box::new(b)),
    }
}

pub fn cyl_mul(a: CylExpr, b: CylExpr) -> CylExpr {
    match (a, b) {
        (Const(x), Const(y)) => Const(x * y),
        (Const(x), _) | (_, Const(x)) if x == 0.0 => Const(0.0),
        (Const(x), b) if x == 1.0 => b,
        (a, Const(y)) if y == 1.0 => a,
        (a, b) => Mul(Box::new(a), Box::new(b)),
    }
}

pub fn cyl_div(a: CylExpr, b: CylExpr) -> CylExpr {
    match (a, b) {
        (Const(x), Const(y)) if y != 0.0 => Const(x / y),
        (a, Const(y)) if y == 1.0 => a,
        (a, b) => Div(Box::new(a), Box::new(b)),
    }
}

pub fn cyl_pow(e: CylExpr, n: u32) -> CylExpr {
    match (e, n) {
        (_, 0) => Const(1.0),
        (e, 1) => e,
        (Const(x), n) => Const(x.powi(n as i32)),
        (e, n) => Pow(Box::new(e), n),
    }
}

pub fn cyl_neg(e: CylExpr) -> CylExpr {
    match e {
        Const(x) => Const(-x),
        Neg(inner) => *inner,
        e => Neg(Box::new(e)),
    }
}

pub fn cyl_apply(f: Func, e: CylExpr) -> CylExpr {
    Apply(f, Box::new(e))
}

pub fn cyl_integral(v: CylExpr) -> CylExpr {
    match v {
        Const(c) if c == 0.0 => Const(0.0),
        v => Integral(Box::new(v)),
    }
}

pub fn cyl_supported(v: CylExpr, lo: f64, hi: f64) -> CylExpr {
    match v {
        Const(c) if c == 0.0 => Const(0.0),
        v => Supported(Box::new(v), lo, hi),
    }
}

impl CylExpr {
    /// Interval outside which the value is known to vanish in t, for
    /// every eta. None means no such interval is known.
    pub fn t_support(&self) -> Option<(f64, f64)> {
        match self {
            Const(c) if *c == 0.0 => Some((0.0, 0.0)),
            Supported(v, lo, hi) => match v.t_support() {
                Some((a, b)) => Some((a.max(*lo), b.min(*hi))),
                None => Some((*lo, *hi)),
            },
            Neg(a) => a.t_support(),
            Pow(a, n) if *n >= 1 => a.t_support(),
            Add(a, b) | Sub(a, b) => match (a.t_support(), b.t_support()) {
                (Some((a0, a1)), Some((b0, b1))) => Some((a0.min(b0), a1.max(b1))),
                _ => None,
            },
            Mul(a, b) => match (a.t_support(), b.t_support()) {
                (Some((a0, a1)), Some((b0, b1))) => Some((a0.max(b0), a1.min(b1))),
                (Some(s), None) | (None, Some(s)) => Some(s),
                (None, None) => None,
            },
            Div(a, _) => a.t_support(),
            _ => None,
        }
    }

    /// Whether the value can depend on eta.
    pub fn depends_on_eta(&self) -> bool {
        match self {
            Const(_) | T => false,
            Eta | Shift(_) => true,
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                a.depends_on_eta() || b.depends_on_eta()
            }
            Pow(a, _) | Neg(a) | Apply(_, a) | Supported(a, _, _) | Integral(a) => {
                a.depends_on_eta()
            }
        }
    }

    pub fn eval(&self, t: f64, eta: f64) -> Result<f64> {
        match self {
            Const(c) => Ok(*c),
            T => Ok(t),
            Eta => Ok(eta),
            Add(a, b) => Ok(a.eval(t, eta)? + b.eval(t, eta)?),
            Sub(a, b) => Ok(a.eval(t, eta)? - b.eval(t, eta)?),
            Mul(a, b) => Ok(a.eval(t, eta)? * b.eval(t, eta)?),
            Div(a, b) => {
                let den = b.eval(t, eta)?;
                if den == 0.0 {
                    return Err(Error::ZeroDenominator {
                        expr: format!("{self} (eta = {eta})"),
                        point: t,
                    });
                }
                Ok(a.eval(t, eta)? / den)
            }
            Pow(a, n) => Ok(a.eval(t, eta)?.powi(*n as i32)),
            Neg(a) => Ok(-a.eval(t, eta)?),
            Apply(f, a) => {
                let x = a.eval(t, eta)?;
                Ok(match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Bump => smooth::bump_value(x),
                    Func::BumpDeriv(m) => smooth::bump_deriv_value(*m, x),
                })
            }
            Shift(x) => x.eval(eta - t),
            Integral(v) => {
                let (mut lo, mut hi) = (0.0f64, t);
                if let Some((a, b)) = v.t_support() {
                    lo = lo.max(a);
                    hi = hi.min(b);
                }
                if lo >= hi {
                    return Ok(0.0);
                }
                quad::integrate(&|tau: f64| v.eval(tau, eta - t + tau), lo, hi, 1e-10)
            }
            Supported(v, lo, hi) => {
                if t < *lo || t > *hi {
                    Ok(0.0)
                } else {
                    v.eval(t, eta)
                }
            }
        }
    }
}

fn func_chain(f: &Func, a: &CylExpr, da: CylExpr) -> CylExpr {
    let outer = match f {
        Func::Sin => cyl_apply(Func::Cos, a.clone()),
        Func::Cos => cyl_neg(cyl_apply(Func::Sin, a.clone())),
        Func::Exp => cyl_apply(Func::Exp, a.clone()),
        Func::Bump => cyl_apply(Func::BumpDeriv(1), a.clone()),
        Func::BumpDeriv(m) => cyl_apply(Func::BumpDeriv(m + 1), a.clone()),
    };
    cyl_mul(outer, da)
}

/// Partial derivative in t. The operator nodes carry their own rules:
/// d1 S(x) = -S(x') and d1 I(v) = v - I(d2 v).
pub fn partial_t(e: &CylExpr) -> CylExpr {
    match e {
        Const(_) | Eta => Const(0.0),
        T => Const(1.0),
        Add(a, b) => cyl_add(partial_t(a), partial_t(b)),
        Sub(a, b) => cyl_sub(partial_t(a), partial_t(b)),
        Mul(a, b) => cyl_add(
            cyl_mul(partial_t(a), (**b).clone()),
            cyl_mul((**a).clone(), partial_t(b)),
        ),
        Div(a, b) => cyl_div(
            cyl_sub(
                cyl_mul(partial_t(a), (**b).clone()),
                cyl_mul((**a).clone(), partial_t(b)),
            ),
            cyl_pow((**b).clone(), 2),
        ),
        Pow(a, n) => cyl_mul(
            cyl_mul(Const(*n as f64), cyl_pow((**a).clone(), n - 1)),
            partial_t(a),
        ),
        Neg(a) => cyl_neg(partial_t(a)),
        Apply(f, a) => func_chain(f, a, partial_t(a)),
        Shift(x) => cyl_neg(Shift(x.derivative())),
        Integral(v) => cyl_sub((**v).clone(), cyl_integral(partial_eta(v))),
        Supported(v, lo, hi) => cyl_supported(partial_t(v), *lo, *hi),
    }
}

/// Partial derivative in eta: d2 S(x) = S(x') and d2 I(v) = I(d2 v).
pub fn partial_eta(e: &CylExpr) -> CylExpr {
    match e {
        Const(_) | T => Const(0.0),
        Eta => Const(1.0),
        Add(a, b) => cyl_add(partial_eta(a), partial_eta(b)),
        Sub(a, b) => cyl_sub(partial_eta(a), partial_eta(b)),
        Mul(a, b) => cyl_add(
            cyl_mul(partial_eta(a), (**b).clone()),
            cyl_mul((**a).clone(), partial_eta(b)),
        ),
        Div(a, b) => cyl_div(
            cyl_sub(
                cyl_mul(partial_eta(a), (**b).clone()),
                cyl_mul((**a).clone(), partial_eta(b)),
            ),
            cyl_pow((**b).clone(), 2),
        ),
        Pow(a, n) => cyl_mul(
            cyl_mul(Const(*n as f64), cyl_pow((**a).clone(), n - 1)),
            partial_eta(a),
        ),
        Neg(a) => cyl_neg(partial_eta(a)),
        Apply(f, a) => func_chain(f, a, partial_eta(a)),
        Shift(x) => Shift(x.derivative()),
        Integral(v) => cyl_integral(partial_eta(v)),
        Supported(v, lo, hi) => cyl_supported(partial_eta(v), *lo, *hi),
    }
}

// Printing mirrors the circle expression language; S and I render as
// calls, a support marker as supp[lo,hi](...).
fn prec(e: &CylExpr) -> u8 {
    match e {
        Const(c) if *c < 0.0 => 3,
        Const(_) | T | Eta | Apply(..) | Shift(_) | Integral(_) | Supported(..) => 5,
        Pow(..) => 4,
        Neg(_) => 3,
        Mul(..) | Div(..) => 2,
        Add(..) | Sub(..) => 1,
    }
}

impl fmt::Display for CylExpr {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(out: &mut fmt::Formatter<'_>, e: &CylExpr, min: u8) -> fmt::Result {
            if prec(e) < min {
                write!(out, "({e})")
            } else {
                write!(out, "{e}")
            }
        }
        match self {
            Const(c) => write!(out, "{c}"),
            T => write!(out, "t"),
            Eta => write!(out, "eta"),
            Add(a, b) => {
                wrap(out, a, 1)?;
                write!(out, " + ")?;
                wrap(out, b, 2)
            }
            Sub(a, b) => {
                wrap(out, a, 1)?;
                write!(out, " - ")?;
                wrap(out, b, 2)
            }
            Mul(a, b) => {
                wrap(out, a, 2)?;
                write!(out, " * ")?;
                wrap(out, b, 3)
            }
            Div(a, b) => {
                wrap(out, a, 2)?;
                write!(out, " / ")?;
                wrap(out, b, 3)
            }
            Pow(a, n) => {
                wrap(out, a, 5)?;
                write!(out, "^{n}")
            }
            Neg(a) => {
                write!(out, "-")?;
                wrap(out, a, 3)
            }
            Apply(f, a) => write!(out, "{}({a})", f.name()),
            Shift(x) => write!(out, "S({})", x.expr()),
            Integral(v) => write!(out, "I({v})"),
            Supported(v, lo, hi) => write!(out, "supp[{lo},{hi}]({v})"),
        }
    }
}

const ETA_PERIOD_TOL: f64 = 1e-8;

/// A cylinder expression declared 1-periodic in eta; the public
/// constructor verifies the declaration on an 11 x 11 grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFn {
    expr: CylExpr,
}

impl CylinderFn {
    pub fn new(expr: CylExpr) -> Result<CylinderFn> {
        let mut max_dev = 0.0f64;
        for a in 0..11 {
            let t = a as f64 / 10.0;
            for b in 0..11 {
                let eta = b as f64 / 10.0;
                let dev = (expr.eval(t, eta + 1.0)? - expr.eval(t, eta)?).abs();
                max_dev = max_dev.max(dev);
            }
        }
        if max_dev > ETA_PERIOD_TOL {
            return Err(Error::NotPeriodic { max_dev });
        }
        Ok(CylinderFn { expr })
    }

    /// For expressions built from periodic parts by periodicity
    /// preserving operations.
    pub(crate) fn from_expr_unchecked(expr: CylExpr) -> CylinderFn {
        CylinderFn { expr }
    }

    pub fn zero() -> CylinderFn {
        CylinderFn { expr: Const(0.0) }
    }

    pub fn constant(c: f64) -> CylinderFn {
        CylinderFn { expr: Const(c) }
    }

    pub fn expr(&self) -> &CylExpr {
        &self.expr
    }

    pub fn eval(&self, t: f64, eta: f64) -> Result<f64> {
        self.expr.eval(t, eta)
    }

    pub fn add(&self, other: &CylinderFn) -> CylinderFn {
        CylinderFn::from_expr_unchecked(cyl_add(self.expr.clone(), other.expr.clone()))
    }

    pub fn scale(&self, c: f64) -> CylinderFn {
        CylinderFn::from_expr_unchecked(cyl_mul(Const(c), self.expr.clone()))
    }
}

/// Shift of initial data along the characteristics: (t, eta) -> x(eta - t).
pub fn op_s(x: &PeriodicFn) -> CylinderFn {
    CylinderFn::from_expr_unchecked(Shift(x.clone()))
}

/// Characteristic integral: (t, eta) -> integral over [0, t] of
/// v(tau, eta - t + tau).
pub fn op_i(v: &CylinderFn) -> CylinderFn {
    CylinderFn::from_expr_unchecked(cyl_integral(v.expr.clone()))
}

/// Derivative along the diagonal direction field, d1 + d2. On integrals
/// it inverts op_i structurally; on shifts it vanishes structurally.
pub fn d_e(v: &CylinderFn) -> CylinderFn {
    CylinderFn::from_expr_unchecked(cyl_add(partial_t(&v.expr), partial_eta(&v.expr)))
}

/// Convert a scalar expression over (t, eta, xi) into a cylinder
/// expression, substituting the third variable by `y`.
fn cyl_of_smooth(e: &SmoothExpr, y: &CylExpr) -> Result<CylExpr> {
    Ok(match e {
        SmoothExpr::Const(c) => Const(*c),
        SmoothExpr::Var(v) => match v.as_str() {
            "t" => T,
            "eta" => Eta,
            "xi" => y.clone(),
            other => return Err(Error::UnknownVariable { name: other.to_string() }),
        },
        SmoothExpr::Add(a, b) => cyl_add(cyl_of_smooth(a, y)?, cyl_of_smooth(b, y)?),
        SmoothExpr::Sub(a, b) => cyl_sub(cyl_of_smooth(a, y)?, cyl_of_smooth(b, y)?),
        SmoothExpr::Mul(a, b) => cyl_mul(cyl_of_smooth(a, y)?, cyl_of_smooth(b, y)?),
        SmoothExpr::Div(a, b) => cyl_div(cyl_of_smooth(a, y)?, cyl_of_smooth(b, y)?),
        SmoothExpr::Pow(a, n) => cyl_pow(cyl_of_smooth(a, y)?, *n),
        SmoothExpr::Neg(a) => cyl_neg(cyl_of_smooth(a, y)?),
        SmoothExpr::Apply(f, a) => cyl_apply(*f, cyl_of_smooth(a, y)?),
    })
}

/// Reject right-hand sides that are not 1-periodic in eta or mention
/// variables other than (t, eta, xi).
fn check_phi3(phi3: &SmoothExpr) -> Result<()> {
    for v in phi3.free_vars() {
        if v != "t" && v != "eta" && v != "xi" {
            return Err(Error::UnknownVariable { name: v });
        }
    }
    let mut max_dev = 0.0f64;
    for a in 0..5 {
        let t = a as f64 / 4.0;
        for b in 0..5 {
            let eta = b as f64 / 4.0;
            for c in 0..5 {
                let xi = -1.0 + c as f64 / 2.0;
                let here = phi3.eval_scalar(&[("t", t), ("eta", eta), ("xi", xi)])?;
                let there = phi3.eval_scalar(&[("t", t), ("eta", eta + 1.0), ("xi", xi)])?;
                max_dev = max_dev.max((there - here).abs());
            }
        }
    }
    if max_dev > ETA_PERIOD_TOL {
        return Err(Error::NotPeriodic { max_dev });
    }
    Ok(())
}

/// Characteristic form of the transport operator: the pair
/// (x, y - S(x) - I(phi3 o [id, y])), whose second component vanishes
/// exactly when y solves the semilinear equation with initial data x.
pub fn h_apply(
    phi3: &SmoothExpr,
    x: &PeriodicFn,
    y: &CylinderFn,
) -> Result<(PeriodicFn, CylinderFn)> {
    check_phi3(phi3)?;
    let composed = cyl_of_smooth(phi3, &y.expr)?;
    let second = cyl_sub(
        cyl_sub(y.expr.clone(), Shift(x.clone())),
        cyl_integral(composed),
    );
    Ok((x.clone(), CylinderFn::from_expr_unchecked(second)))
}

/// Directional derivative of h at (x, y) in the direction (0, v1):
/// (0, v1 - I((d3 phi3 o [id, y]) * v1)).
pub fn h_gateaux(
    phi3: &SmoothExpr,
    x: &PeriodicFn,
    y: &CylinderFn,
    v1: &CylinderFn,
) -> Result<(PeriodicFn, CylinderFn)> {
    check_phi3(phi3)?;
    let dphi3 = phi3.diff_symbolic("xi");
    let slope = cyl_of_smooth(&dphi3, &y.expr)?;
    let second = cyl_sub(
        v1.expr.clone(),
        cyl_integral(cyl_mul(slope, v1.expr.clone())),
    );
    Ok((PeriodicFn::zero(x.var_name()), CylinderFn::from_expr_unchecked(second)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GCfg {
    pub t_res: usize,
    pub eta_res: usize,
    pub refine_depth: usize,
    /// Extra dense t samples (lo, hi, count) for narrowly supported
    /// terms the uniform grid would miss.
    pub t_window: Option<(f64, f64, usize)>,
}

impl Default for GCfg {
    fn default() -> Self {
        GCfg { t_res: 64, eta_res: 64, refine_depth: 24, t_window: None }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GSeminormValue {
    pub value: f64,
    pub index: usize,
    pub grid: GCfg,
}

fn sup_on_cylinder(e: &CylExpr, cfg: GCfg) -> Result<f64> {
    if let Const(c) = e {
        return Ok(c.abs());
    }
    let etas: Vec<f64> = if e.depends_on_eta() {
        (0..cfg.eta_res).map(|b| b as f64 / cfg.eta_res as f64).collect()
    } else {
        vec![0.0]
    };
    let mut ts: Vec<f64> = (0..=cfg.t_res).map(|a| a as f64 / cfg.t_res as f64).collect();
    if let Some((lo, hi, count)) = cfg.t_window {
        for k in 0..=count {
            ts.push(lo + (hi - lo) * k as f64 / count as f64);
        }
    }
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &t in &ts {
        if !(0.0..=1.0).contains(&t) {
            continue;
        }
        for &eta in &etas {
            let v = e.eval(t, eta)?.abs();
            if v > best.0 {
                best = (v, t, eta);
            }
        }
    }
    // refine in t around the argmax, then in eta at the refined value
    let ht = 1.0 / cfg.t_res as f64;
    let ht = match cfg.t_window {
        Some((lo, hi, count)) if best.1 >= lo && best.1 <= hi => ht.min((hi - lo) / count as f64),
        _ => ht,
    };
    let gt = |t: f64| e.eval(t.clamp(0.0, 1.0), best.2).map(f64::abs);
    let refined_t = golden_max(&gt, (best.1 - ht).max(0.0), (best.1 + ht).min(1.0), cfg.refine_depth)?;
    let mut value = best.0.max(refined_t);
    if etas.len() > 1 {
        let he = 1.0 / cfg.eta_res as f64;
        let ge = |eta: f64| e.eval(best.1, eta).map(f64::abs);
        let refined_eta = golden_max(&ge, best.2 - he, best.2 + he, cfg.refine_depth)?;
        value = value.max(refined_eta);
    }
    Ok(value)
}

/// Pair seminorm: sup over l1 <= i of |D^l1 u| plus the sup over
/// l0 in {0, 1}, k + l + l0 <= i of |d1^k d2^l (d1+d2)^l0 v| on the
/// cylinder.
pub fn g_seminorm(u: &PeriodicFn, v: &CylinderFn, index: usize, cfg: GCfg) -> Result<GSeminormValue> {
    let circle = GridCfg { resolution: 1024, refine_depth: cfg.refine_depth };
    let u_part = seminorm_sup(u, index, circle)?.value;

    let mut v_part = 0.0f64;
    for l0 in 0..=1usize.min(index) {
        let base = if l0 == 1 { d_e(v).expr().clone() } else { v.expr.clone() };
        let mut eta_terms = vec![base];
        for _ in 0..(index - l0) {
            let next = partial_eta(eta_terms.last().unwrap());
            eta_terms.push(next);
        }
        for (l, term) in eta_terms.into_iter().enumerate() {
            let mut cur = term;
            for k in 0..=(index - l0 - l) {
                if k > 0 {
                    cur = partial_t(&cur);
                }
                v_part = v_part.max(sup_on_cylinder(&cur, cfg)?);
            }
        }
    }
    Ok(GSeminormValue { value: u_part + v_part, index, grid: cfg })
}

/// Bump-localized monomial witness: delta^{-1/2} b0((t - t0)/delta)
/// (t - t0)^{i0+1}, supported in |t - t0| < 3 delta.
pub fn transport_witness_v(t0: f64, i0: usize, delta: f64) -> Result<CylinderFn> {
    if i0 == 0 {
        return Err(Error::InvalidArgument("witness order i0 must be positive".into()));
    }
    if !(t0 > 0.0 && t0 < 1.0) {
        return Err(Error::InvalidArgument("witness center must lie inside (0, 1)".into()));
    }
    let reach = t0.min(1.0 - t0) / 3.0;
    if !(delta > 0.0 && delta <= reach) {
        return Err(Error::SupportOverflow { lo: t0 - 3.0 * delta, hi: t0 + 3.0 * delta });
    }
    let centered = cyl_sub(T, Const(t0));
    let bump = cyl_apply(Func::Bump, cyl_mul(Const(1.0 / delta), centered.clone()));
    let body = cyl_mul(
        Const(delta.powf(-0.5)),
        cyl_mul(bump, cyl_pow(centered, (i0 + 1) as u32)),
    );
    Ok(CylinderFn::from_expr_unchecked(cyl_supported(
        body,
        t0 - 3.0 * delta,
        t0 + 3.0 * delta,
    )))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthRow {
    pub delta: f64,
    /// ||(0, v_delta)||_{i0}: shrinks like delta^{1/2}.
    pub g_seminorm_i0: f64,
    /// delta^{-1/2} (i0+1)!, the exact top partial of v_delta at t0.
    pub exact_partial_lower: f64,
    /// G-seminorm at index i0+2 of the derivative difference
    /// (h'(z + w) - h'(z)) applied to (0, 1): grows like delta^{-1/2}.
    pub derivative_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthTable {
    pub t0: f64,
    pub i0: usize,
    /// Whether d3^2 phi3 was observed nonzero along (t0, eta, y(t0, eta)).
    pub nonlinear: bool,
    pub rows: Vec<GrowthRow>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// For each delta, perturb y by the bump witness and measure how far the
/// directional derivative moves when probed with the constant direction.
/// The seminorm of the perturbation falls like delta^{1/2} while the
/// derivative moves like delta^{-1/2}: unboundedness in miniature.
pub fn transport_growth_demo(
    phi3: &SmoothExpr,
    y: &CylinderFn,
    t0: f64,
    i0: usize,
    deltas: &[f64],
) -> Result<GrowthTable> {
    check_phi3(phi3)?;
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("growth demo needs at least one delta".into()));
    }
    let curvature = phi3.diff_symbolic("xi").diff_symbolic("xi");
    let mut strongest = 0.0f64;
    for b in 0..33 {
        let eta = b as f64 / 32.0;
        let xi = y.eval(t0, eta)?;
        let c = curvature.eval_scalar(&[("t", t0), ("eta", eta), ("xi", xi)])?;
        strongest = strongest.max(c.abs());
    }
    let nonlinear = strongest > 1e-9;

    let x = PeriodicFn::zero("s");
    let one = CylinderFn::constant(1.0);
    let (_, base) = h_gateaux(phi3, &x, y, &one)?;

    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let w = transport_witness_v(t0, i0, delta)?;
        let window = Some((t0 - 3.0 * delta, t0 + 3.0 * delta, 256));
        let wcfg = GCfg { t_window: window, ..GCfg::default() };
        let wnorm = g_seminorm(&x, &w, i0, wcfg)?.value;

        let (_, moved) = h_gateaux(phi3, &x, &y.add(&w), &one)?;
        let diff = CylinderFn::from_expr_unchecked(cyl_sub(
            moved.expr().clone(),
            base.expr().clone(),
        ));
        let distance = g_seminorm(&x, &diff, i0 + 2, wcfg)?.value;

        rows.push(GrowthRow {
            delta,
            g_seminorm_i0: wnorm,
            exact_partial_lower: delta.powf(-0.5) * factorial(i0 + 1),
            derivative_distance: distance,
        });
    }
    Ok(GrowthTable { t0, i0, nonlinear, rows })
}
