//! Directional-derivative checks for the substitution map x -> phi(x).
//! The analytic derivative at x in direction u is (phi' o x) * u; the
//! module builds that multiplication operator, measures how fast finite
//! difference quotients converge to it, and probes how the operator
//! moves when x is perturbed inside a seminorm ball.

use crate::error::{Error, Result};
use crate::expr::{self, SmoothExpr};
use crate::seminorm::{gamma_norm_lower, seminorm_sup, GridCfg};
use crate::smooth::{build_trig_witness, PeriodicFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

fn check_univariate(phi: &SmoothExpr, phi_var: &str) -> Result<()> {
    for v in phi.free_vars() {
        if v != phi_var {
            return Err(Error::UnknownVariable { name: v });
        }
    }
    Ok(())
}

/// Pointwise multiplication by a fixed periodic function.
#[derive(Debug, Clone)]
pub struct MultiplicationOperator {
    multiplier: PeriodicFn,
}

impl MultiplicationOperator {
    pub fn new(multiplier: PeriodicFn) -> Self {
        MultiplicationOperator { multiplier }
    }

    pub fn multiplier(&self) -> &PeriodicFn {
        &self.multiplier
    }

    pub fn apply(&self, v: &PeriodicFn) -> Result<PeriodicFn> {
        if self.multiplier.var_name() != v.var_name() {
            return Err(Error::InvalidArgument(
                "operator and argument use different variables".into(),
            ));
        }
        Ok(PeriodicFn::from_parts_unchecked(
            expr::mul(self.multiplier.expr().clone(), v.expr().clone()),
            v.var_name(),
        ))
    }

    /// Lower bound for the operator norm on the index-i seminorm ball.
    pub fn norm_lower(&self, index: usize, probe: &PeriodicFn, cfg: GridCfg) -> Result<f64> {
        gamma_norm_lower(&self.multiplier, index, probe, cfg)
    }
}

/// The substitution map itself: s -> phi(x(s)), checked periodic.
pub fn compose_map(phi: &SmoothExpr, phi_var: &str, x: &PeriodicFn) -> Result<PeriodicFn> {
    check_univariate(phi, phi_var)?;
    PeriodicFn::new(phi.substitute(phi_var, x.expr()), x.var_name())
}

/// Analytic directional derivative of the substitution map at x: the
/// operator of multiplication by phi' o x.
pub fn gateaux_analytic(phi: &SmoothExpr, phi_var: &str, x: &PeriodicFn) -> Result<MultiplicationOperator> {
    check_univariate(phi, phi_var)?;
    let dphi = phi.diff_symbolic(phi_var);
    Ok(MultiplicationOperator::new(PeriodicFn::new(
        dphi.substitute(phi_var, x.expr()),
        x.var_name(),
    )?))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuotientResidual {
    pub step: f64,
    pub index: usize,
    /// ||(phi(x + step u) - phi(x)) / step - (phi' o x) u||_index
    pub residual: f64,
}

/// Residual between the difference quotient and the analytic derivative.
pub fn gateaux_quotient(
    phi: &SmoothExpr,
    phi_var: &str,
    x: &PeriodicFn,
    u: &PeriodicFn,
    step: f64,
    index: usize,
    cfg: GridCfg,
) -> Result<QuotientResidual> {
    if step == 0.0 || !step.is_finite() {
        return Err(Error::InvalidArgument("difference step must be finite and nonzero".into()));
    }
    if x.var_name() != u.var_name() {
        return Err(Error::InvalidArgument("base point and direction use different variables".into()));
    }
    check_univariate(phi, phi_var)?;
    let xt = expr::add(x.expr().clone(), expr::mul(expr::konst(step), u.expr().clone()));
    let fxt = phi.substitute(phi_var, &xt);
    let fx = phi.substitute(phi_var, x.expr());
    let quotient = expr::div(expr::sub(fxt, fx), expr::konst(step));
    let dphi = phi.diff_symbolic(phi_var);
    let analytic = expr::mul(dphi.substitute(phi_var, x.expr()), u.expr().clone());
    let diff = PeriodicFn::from_parts_unchecked(expr::sub(quotient, analytic), x.var_name());
    let residual = seminorm_sup(&diff, index, cfg)?.value;
    Ok(QuotientResidual { step, index, residual })
}

/// Least-squares slope of log(residual) against log(step). For a twice
/// differentiable phi the quotient error is O(step), slope 1.
pub fn loglog_slope(points: &[QuotientResidual]) -> Result<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.residual > 0.0)
        .map(|p| (p.step.abs().ln(), p.residual.ln()))
        .collect();
    if usable.len() < 2 {
        return Err(Error::InvalidArgument(
            "slope needs at least two nonzero residuals".into(),
        ));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope needs distinct steps".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeObservation {
    pub label: String,
    /// ||u||_{i0} of the perturbation.
    pub norm: f64,
    /// ||phi' o (x+u) - phi' o x||_index.
    pub distance: f64,
    pub admissible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityProbe {
    pub index: usize,
    pub ball_index: usize,
    pub radius: f64,
    pub max_distance: f64,
    pub admissible: usize,
    pub observations: Vec<ProbeObservation>,
}

/// Perturb x by directions inside the radius-delta ball of the index-i0
/// seminorm and record how far the derivative multiplier moves. High
/// frequency witnesses sit near the ball boundary with tiny amplitude,
/// so a multiplier that only depends on x through finitely many
/// derivatives stays put while rough perturbations expose discontinuity.
pub fn cb_continuity_probe(
    phi: &SmoothExpr,
    phi_var: &str,
    x: &PeriodicFn,
    i0: usize,
    delta: f64,
    index: usize,
    sample_count: usize,
    seed: u64,
    cfg: GridCfg,
) -> Result<ContinuityProbe> {
    if delta <= 0.0 || !delta.is_finite() {
        return Err(Error::InvalidArgument("ball radius must be positive and finite".into()));
    }
    check_univariate(phi, phi_var)?;
    let dphi = phi.diff_symbolic(phi_var);
    let base = dphi.substitute(phi_var, x.expr());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observations = Vec::new();

    let mut record = |label: String, u: &PeriodicFn, res_floor: usize| -> Result<()> {
        let ucfg = GridCfg { resolution: cfg.resolution.max(res_floor), ..cfg };
        let norm = seminorm_sup(u, i0, ucfg)?.value;
        let admissible = norm < delta;
        let shifted = expr::add(x.expr().clone(), u.expr().clone());
        let moved = dphi.substitute(phi_var, &shifted);
        let diff = PeriodicFn::from_parts_unchecked(expr::sub(moved, base.clone()), x.var_name());
        let distance = seminorm_sup(&diff, index, ucfg)?.value;
        observations.push(ProbeObservation { label, norm, distance, admissible });
        Ok(())
    };

    // frequency ladder: witnesses u_n shrink in the i0 seminorm like
    // n^{-1/2}, so they enter any ball eventually
    let witness_count = sample_count.clamp(1, 5);
    for k in 0..witness_count {
        let n = 10u64.pow(k as u32);
        let u = build_trig_witness(n, i0.max(2) & !1, 0.0)?;
        let coarse = seminorm_sup(&u, i0, cfg)?.value;
        let u = if coarse >= delta { u.scale(0.9 * delta / coarse) } else { u };
        record(format!("witness_n{n}"), &u, 16 * n as usize)?;
    }

    // random trigonometric polynomials scaled to sit inside the ball
    for t in witness_count..sample_count {
        let mut e = expr::konst(0.0);
        for k in 1..=6u32 {
            let phase = expr::mul(expr::konst(2.0 * PI * k as f64), expr::var(x.var_name()));
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            e = expr::add(e, expr::mul(expr::konst(a), expr::apply(expr::Func::Sin, phase.clone())));
            e = expr::add(e, expr::mul(expr::konst(b), expr::apply(expr::Func::Cos, phase)));
        }
        let raw = PeriodicFn::new(e, x.var_name())?;
        let sigma = seminorm_sup(&raw, i0, cfg)?.value;
        if sigma == 0.0 {
            continue;
        }
        record(format!("random_{t}"), &raw.scale(0.9 * delta / sigma), 0)?;
    }

    let mut max_distance = 0.0f64;
    let mut admissible = 0usize;
    for o in &observations {
        if o.admissible {
            admissible += 1;
            max_distance = max_distance.max(o.distance);
        }
    }
    Ok(ContinuityProbe { index, ball_index: i0, radius: delta, max_distance, admissible, observations })
}
