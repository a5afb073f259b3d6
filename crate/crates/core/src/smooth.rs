//! Semantics for smooth expressions: jet evaluation, the flat bump with
//! its branchwise derivatives, functions of period one, trigonometric
//! witnesses and separable bump-monomial products.

use crate::error::{Error, Result};
use crate::expr::{self, diff_symbolic, Func, SmoothExpr};
use crate::jet::{self, Jet};

// ════════════════════════════════════════════════════════════════════════
// the flat bump
// ════════════════════════════════════════════════════════════════════════

/// Past this magnitude of the inner exponent the transition branch is
/// indistinguishable from its flat limit: the neglected derivatives are
/// below 1e-80 for every order this crate supports.
const BUMP_EXP_CUTOFF: f64 = 200.0;

fn flat(value: f64, order: usize) -> Vec<f64> {
    let mut d = vec![0.0; order + 1];
    d[0] = value;
    d
}

/// Derivative values b^(0)(t), .., b^(order)(t) of the bump: identically 1
/// on [-1, 1], identically 0 outside (-3, 3), and a smooth logistic-type
/// transition in between that is flat to all orders at the seams.
pub fn bump_outer_derivs(t: f64, order: usize) -> Vec<f64> {
    let a = t.abs();
    if a <= 1.0 {
        return flat(1.0, order);
    }
    if a >= 3.0 {
        return flat(0.0, order);
    }
    let w0 = 2.0 - a;
    let g0 = w0 / (w0 * w0 - 1.0);
    if g0 >= BUMP_EXP_CUTOFF {
        return flat(0.0, order);
    }
    if g0 <= -BUMP_EXP_CUTOFF {
        return flat(1.0, order);
    }
    // transition branch evaluated through jets; |t| is smooth here
    let s = Jet::variable(t, order);
    let abs_jet = if t > 0.0 { s } else { jet::jet_neg(&s) };
    let two = Jet::constant(t, 2.0, order);
    let one = Jet::constant(t, 1.0, order);
    let w = jet::jet_sub(&two, &abs_jet).expect("same base");
    let den = jet::jet_sub(&jet::jet_mul(&w, &w).expect("same base"), &one).expect("same base");
    let g = jet::jet_div(&w, &den, "bump transition").expect("denominator negative on branch");
    let outer_exp = vec![g.value().exp(); order + 1];
    let eg = jet::jet_compose(&outer_exp, &g).expect("length checked");
    let den2 = jet::jet_add(&one, &eg).expect("same base");
    let b = jet::jet_div(&one, &den2, "bump transition").expect("denominator at least one");
    b.derivs().to_vec()
}

/// Pointwise bump value.
pub fn bump_value(t: f64) -> f64 {
    bump_outer_derivs(t, 0)[0]
}

/// Pointwise value of the m-th bump derivative.
pub fn bump_deriv_value(m: u32, t: f64) -> f64 {
    bump_outer_derivs(t, m as usize)[m as usize]
}

// ════════════════════════════════════════════════════════════════════════
// jet evaluation of expressions
// ════════════════════════════════════════════════════════════════════════

fn trig_outer(sin_first: bool, v: f64, order: usize) -> Vec<f64> {
    let cycle = [v.sin(), v.cos(), -v.sin(), -v.cos()];
    let shift = if sin_first { 0 } else { 1 };
    (0..=order).map(|k| cycle[(k + shift) % 4]).collect()
}

/// Jet of a univariate expression in `var` at `point`, carrying raw
/// derivatives up to `order`.
pub fn eval_jet(e: &SmoothExpr, var: &str, point: f64, order: usize) -> Result<Jet> {
    match e {
        SmoothExpr::Const(c) => Ok(Jet::constant(point, *c, order)),
        SmoothExpr::Var(v) => {
            if v == var {
                Ok(Jet::variable(point, order))
            } else {
                Err(Error::UnknownVariable { name: v.clone() })
            }
        }
        SmoothExpr::Add(a, b) => {
            jet::jet_add(&eval_jet(a, var, point, order)?, &eval_jet(b, var, point, order)?)
        }
        SmoothExpr::Sub(a, b) => {
            jet::jet_sub(&eval_jet(a, var, point, order)?, &eval_jet(b, var, point, order)?)
        }
        SmoothExpr::Mul(a, b) => {
            jet::jet_mul(&eval_jet(a, var, point, order)?, &eval_jet(b, var, point, order)?)
        }
        SmoothExpr::Div(a, b) => {
            let bj = eval_jet(b, var, point, order)?;
            if bj.value() == 0.0 {
                return Err(Error::ZeroDenominator { expr: e.to_string(), point });
            }
            jet::jet_div(&eval_jet(a, var, point, order)?, &bj, "checked above")
        }
        SmoothExpr::Pow(a, n) => Ok(jet::jet_powi(&eval_jet(a, var, point, order)?, *n)),
        SmoothExpr::Neg(a) => Ok(jet::jet_neg(&eval_jet(a, var, point, order)?)),
        SmoothExpr::Apply(f, a) => {
            let aj = eval_jet(a, var, point, order)?;
            let v = aj.value();
            let outer: Vec<f64> = match f {
                Func::Sin => trig_outer(true, v, order),
                Func::Cos => trig_outer(false, v, order),
                Func::Exp => vec![v.exp(); order + 1],
                Func::Bump => bump_outer_derivs(v, order),
                Func::BumpDeriv(m) => {
                    bump_outer_derivs(v, order + *m as usize)[*m as usize..].to_vec()
                }
            };
            jet::jet_compose(&outer, &aj)
        }
    }
}

// ════════════════════════════════════════════════════════════════════════
// functions of period one
// ════════════════════════════════════════════════════════════════════════

const PERIOD_CHECK_POINTS: usize = 101;
const PERIOD_TOL: f64 = 1e-10;

/// A univariate expression declared 1-periodic; the constructor verifies
/// the declaration on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFn {
    expr: SmoothExpr,
    var: String,
}

impl PeriodicFn {
    pub fn new(expr: SmoothExpr, var: &str) -> Result<PeriodicFn> {
        for v in expr.free_vars() {
            if v != var {
                return Err(Error::UnknownVariable { name: v });
            }
        }
        let f = PeriodicFn { expr, var: var.to_string() };
        let mut max_dev: f64 = 0.0;
        for k in 0..PERIOD_CHECK_POINTS {
            let s = k as f64 / (PERIOD_CHECK_POINTS - 1) as f64;
            let dev = (f.eval(s + 1.0)? - f.eval(s)?).abs();
            max_dev = max_dev.max(dev);
        }
        if max_dev > PERIOD_TOL {
            return Err(Error::NotPeriodic { max_dev });
        }
        Ok(f)
    }

    /// For internally built expressions whose periodicity is structural.
    pub(crate) fn from_parts_unchecked(expr: SmoothExpr, var: &str) -> PeriodicFn {
        PeriodicFn { expr, var: var.to_string() }
    }

    pub fn zero(var: &str) -> PeriodicFn {
        PeriodicFn::from_parts_unchecked(expr::konst(0.0), var)
    }

    pub fn constant(c: f64, var: &str) -> PeriodicFn {
        PeriodicFn::from_parts_unchecked(expr::konst(c), var)
    }

    pub fn expr(&self) -> &SmoothExpr {
        &self.expr
    }

    pub fn var_name(&self) -> &str {
        &self.var
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        self.expr.eval_scalar(&[(&self.var, s)])
    }

    pub fn eval_jet(&self, s: f64, order: usize) -> Result<Jet> {
        eval_jet(&self.expr, &self.var, s, order)
    }

    /// Symbolic derivative; periodicity is preserved.
    pub fn derivative(&self) -> PeriodicFn {
        PeriodicFn::from_parts_unchecked(diff_symbolic(&self.expr, &self.var), &self.var)
    }

    pub fn scale(&self, c: f64) -> PeriodicFn {
        PeriodicFn::from_parts_unchecked(expr::mul(expr::konst(c), self.expr.clone()), &self.var)
    }
}

// ════════════════════════════════════════════════════════════════════════
// trigonometric witnesses
// ════════════════════════════════════════════════════════════════════════

/// Scaled sine u_n(s) = (2 pi n)^(-i0 - 1/2) sin(2 pi n (s - s0)).
///
/// Its seminorm of index i0 is (2 pi n)^(-1/2) while the derivative of
/// order i0 + 1 at s0 has magnitude (2 pi n)^(1/2); the product of the two
/// is one for every frequency.
pub fn build_trig_witness(n: u64, i0: usize, s0: f64) -> Result<PeriodicFn> {
    if n == 0 {
        return Err(Error::InvalidArgument("witness frequency must be positive".into()));
    }
    if i0 == 0 || i0 % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "witness order i0 must be a positive even integer, got {i0}"
        )));
    }
    let omega = 2.0 * std::f64::consts::PI * n as f64;
    let coef = omega.powf(-(i0 as f64) - 0.5);
    let phase = expr::mul(expr::konst(omega), expr::sub(expr::var("s"), expr::konst(s0)));
    let e = expr::mul(expr::konst(coef), expr::apply(Func::Sin, phase));
    PeriodicFn::new(e, "s")
}

/// Closed form of the index-i0 seminorm of the witness of frequency n.
pub fn trig_witness_norm(n: u64) -> f64 {
    (2.0 * std::f64::consts::PI * n as f64).powf(-0.5)
}

/// Closed form of |D^(i0+1) u_n(s0)|.
pub fn trig_witness_top_deriv(n: u64) -> f64 {
    (2.0 * std::f64::consts::PI * n as f64).powf(0.5)
}

// ════════════════════════════════════════════════════════════════════════
// separable products of univariate factors
// ════════════════════════════════════════════════════════════════════════

/// Product f(y) = f_0(y_0) ... f_(d-1)(y_(d-1)); every factor is an
/// expression in the single variable `var`, applied to its own coordinate.
/// Mixed partials split into products of univariate derivatives.
#[derive(Debug, Clone)]
pub struct SeparableFn {
    factors: Vec<SmoothExpr>,
    var: String,
}

impl SeparableFn {
    pub fn new(factors: Vec<SmoothExpr>, var: &str) -> Result<SeparableFn> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("a separable function needs at least one factor".into()));
        }
        for f in &factors {
            for v in f.free_vars() {
                if v != var {
                    return Err(Error::UnknownVariable { name: v });
                }
            }
        }
        Ok(SeparableFn { factors, var: var.to_string() })
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[SmoothExpr] {
        &self.factors
    }

    /// Mixed partial of multi-order `kappa` at `point`.
    pub fn partial_at(&self, kappa: &[u32], point: &[f64]) -> Result<f64> {
        assert_eq!(kappa.len(), self.dim());
        assert_eq!(point.len(), self.dim());
        let mut acc = 1.0;
        for (i, f) in self.factors.iter().enumerate() {
            let j = eval_jet(f, &self.var, point[i], kappa[i] as usize)?;
            acc *= j.deriv(kappa[i] as usize);
        }
        Ok(acc)
    }
}

/// Bump-monomial product: factor i is bump(y/delta) * y^(alpha_i). Its
/// partial of multi-order alpha at the origin is exactly alpha!, every
/// lower-order partial there vanishes unless kappa = alpha, and away from
/// the origin all partials of order kappa <= alpha are bounded by
/// delta^(|alpha| - |kappa|) times a delta-independent constant.
pub fn build_bump_monomial(dim: usize, alpha: &[u32], delta: f64) -> Result<SeparableFn> {
    if alpha.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "alpha has {} entries for dimension {dim}",
            alpha.len()
        )));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1], got {delta}")));
    }
    let factors = alpha
        .iter()
        .map(|&a| {
            expr::mul(
                expr::apply(Func::Bump, expr::mul(expr::konst(1.0 / delta), expr::var("y"))),
                expr::pow(expr::var("y"), a),
            )
        })
        .collect();
    SeparableFn::new(factors, "y")
}

#[derive(Debug, Clone)]
pub struct BumpBoundReport {
    pub passes: bool,
    pub max_ratio: f64,
    pub worst_kappa: Vec<u32>,
    pub bound: f64,
}

/// Check |partial^kappa f| <= delta^(|alpha| - |kappa|) * bound over the
/// support for every kappa <= alpha componentwise. Factor sups are taken
/// on a canonical grid scaled by delta, so the observed ratios are
/// delta-invariant up to roundoff.
pub fn bump_bound_check(
    f: &SeparableFn,
    alpha: &[u32],
    delta: f64,
    bound: f64,
    resolution: usize,
) -> Result<BumpBoundReport> {
    assert_eq!(alpha.len(), f.dim());
    let resolution = resolution.max(64);
    // per-factor sup of |D^k factor_i| on the support, all k <= alpha_i
    let mut sups: Vec<Vec<f64>> = Vec::with_capacity(f.dim());
    for (i, fac) in f.factors.iter().enumerate() {
        let top = alpha[i] as usize;
        let mut best = vec![0.0f64; top + 1];
        for g in 0..=resolution {
            let tau = -3.0 + 6.0 * g as f64 / resolution as f64;
            let y = delta * tau;
            let j = eval_jet(fac, &f.var, y, top)?;
            for (k, b) in best.iter_mut().enumerate() {
                *b = b.max(j.deriv(k).abs());
            }
        }
        sups.push(best);
    }
    let alpha_total: u32 = alpha.iter().sum();
    let mut kappa = vec![0u32; f.dim()];
    let mut max_ratio = f64::NEG_INFINITY;
    let mut worst = kappa.clone();
    loop {
        let kappa_total: u32 = kappa.iter().sum();
        let mut sup = 1.0;
        for (i, &k) in kappa.iter().enumerate() {
            sup *= sups[i][k as usize];
        }
        let ratio = sup / delta.powi((alpha_total - kappa_total) as i32);
        if ratio > max_ratio {
            max_ratio = ratio;
            worst = kappa.clone();
        }
        // odometer over kappa <= alpha
        let mut pos = 0;
        loop {
            if pos == f.dim() {
                return Ok(BumpBoundReport {
                    passes: max_ratio <= bound,
                    max_ratio,
                    worst_kappa: worst,
                    bound,
                });
            }
            if kappa[pos] < alpha[pos] {
                kappa[pos] += 1;
                for slot in kappa[..pos].iter_mut() {
                    *slot = 0;
                }
                break;
            }
            pos += 1;
        }
    }
}
