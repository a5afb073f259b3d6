//! Witness search against boundedness claims for the derivative of the
//! substitution map. A claim asserts that near the constant base point
//! s0 the index-(i0+1) seminorm of phi' o x stays below a bound M for
//! every x within delta of s0 in the index-i0 seminorm. When phi is
//! genuinely curved at s0 the high frequency witnesses break any such
//! bound: their i0 seminorm shrinks like n^{-1/2} while the top
//! derivative of the composition grows like n^{1/2}.

use crate::error::{Error, Result};
use crate::expr::{self, SmoothExpr};
use crate::partitions;
use crate::seminorm::{seminorm_sup, GridCfg, SeminormValue};
use crate::smooth::{build_trig_witness, trig_witness_norm, PeriodicFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Degenerate second derivatives below this magnitude are treated as
/// affine: no witness construction is attempted.
pub const AFFINE_TOL: f64 = 1e-12;

const MAX_FREQUENCY: u64 = 1 << 55;
const MAX_GRID: usize = 1 << 27;

#[derive(Debug, Clone, Serialize)]
pub struct BoundedClaim {
    #[serde(serialize_with = "expr_as_text")]
    pub phi: SmoothExpr,
    pub phi_var: String,
    pub s0: f64,
    pub i0: usize,
    pub bound: f64,
    pub delta: f64,
}

fn expr_as_text<S: serde::Serializer>(e: &SmoothExpr, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(e)
}

impl BoundedClaim {
    pub fn new(
        phi: SmoothExpr,
        phi_var: &str,
        s0: f64,
        i0: usize,
        bound: f64,
        delta: f64,
    ) -> Result<BoundedClaim> {
        if i0 == 0 || i0 % 2 != 0 {
            return Err(Error::InvalidArgument("claim index i0 must be even and positive".into()));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidArgument("claim bound must be positive and finite".into()));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument("claim radius must be positive and finite".into()));
        }
        if !s0.is_finite() {
            return Err(Error::InvalidArgument("claim base point must be finite".into()));
        }
        for v in phi.free_vars() {
            if v != phi_var {
                return Err(Error::UnknownVariable { name: v });
            }
        }
        Ok(BoundedClaim { phi, phi_var: phi_var.to_string(), s0, i0, bound, delta })
    }

    /// Output seminorm index the claim constrains.
    pub fn output_index(&self) -> usize {
        self.i0 + 1
    }

    /// Same claim with the output index stated explicitly; rejects any
    /// index other than i0 + 1.
    pub fn with_output_index(
        phi: SmoothExpr,
        phi_var: &str,
        s0: f64,
        i0: usize,
        i: usize,
        bound: f64,
        delta: f64,
    ) -> Result<BoundedClaim> {
        if i != i0 + 1 {
            return Err(Error::InconsistentClaim { i, expected: i0 + 1 });
        }
        BoundedClaim::new(phi, phi_var, s0, i0, bound, delta)
    }
}

fn eval_at(e: &SmoothExpr, var: &str, s: f64) -> Result<f64> {
    e.eval_scalar(&[(var, s)])
}

/// Largest |f| over [lo, hi]: grid scan plus golden refinement, also
/// returning the refined location.
fn interval_argmax(
    e: &SmoothExpr,
    var: &str,
    lo: f64,
    hi: f64,
    res: usize,
    depth: usize,
) -> Result<(f64, f64)> {
    let res = res.max(8);
    let h = (hi - lo) / res as f64;
    let mut best = (f64::NEG_INFINITY, lo);
    for k in 0..=res {
        let s = lo + k as f64 * h;
        let v = eval_at(e, var, s)?.abs();
        if v > best.0 {
            best = (v, s);
        }
    }
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best.1 - h).max(lo), (best.1 + h).min(hi));
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = eval_at(e, var, x1)?.abs();
    let mut f2 = eval_at(e, var, x2)?.abs();
    let track = |v: f64, s: f64, best: &mut (f64, f64)| {
        if v > best.0 {
            *best = (v, s);
        }
    };
    track(f1, x1, &mut best);
    track(f2, x2, &mut best);
    for _ in 0..depth {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = eval_at(e, var, x1)?.abs();
            track(f1, x1, &mut best);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = eval_at(e, var, x2)?.abs();
            track(f2, x2, &mut best);
        }
    }
    Ok((best.1, best.0))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NonaffinityScan {
    /// Location where |phi''| is largest on the scanned interval.
    pub s0: f64,
    pub magnitude: f64,
    pub affine: bool,
}

/// Locate the strongest curvature of phi on an interval. A claim pinned
/// at the returned point gets the largest leading coefficient available.
pub fn scan_nonaffinity(
    phi: &SmoothExpr,
    phi_var: &str,
    interval: (f64, f64),
    grid: usize,
) -> Result<NonaffinityScan> {
    if grid < 64 {
        return Err(Error::InvalidArgument("nonaffinity scan needs at least 64 grid points".into()));
    }
    if !(interval.0 < interval.1) {
        return Err(Error::InvalidArgument("scan interval must be nonempty".into()));
    }
    let phi2 = phi.diff_symbolic_n(phi_var, 2);
    let (s0, magnitude) = interval_argmax(&phi2, phi_var, interval.0, interval.1, grid, 48)?;
    Ok(NonaffinityScan { s0, magnitude, affine: magnitude < AFFINE_TOL })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct M2Certificate {
    pub i0: usize,
    /// Derivative order being bounded, always i0 + 1.
    pub i: usize,
    pub s0: f64,
    pub radius: f64,
    /// Partitions of an i-element set with every block of size <= i0.
    pub b: u64,
    /// Largest |phi^(k+1)| for 1 <= k <= i on [s0 - 1.1 radius, s0 + 1.1 radius].
    pub c: f64,
    /// b * c, dominating every non-leading term of the derivative
    /// expansion of phi' o (s0 + u) once ||u||_{i0} <= radius.
    pub m2: f64,
}

/// Bound the non-leading part of D^i (phi' o (s0 + u)). The expansion
/// splits into the single-block term phi''(s0+u) D^i u and partitions
/// whose blocks all have size <= i0; each of those contributes at most
/// c ||u||^{|blocks|}, so b * c * (1 + ||u||)^i covers their sum.
///
/// The certificate is cross-checked against 50 random directions before
/// being returned.
pub fn m2_bound(
    phi: &SmoothExpr,
    phi_var: &str,
    s0: f64,
    i0: usize,
    radius: f64,
) -> Result<M2Certificate> {
    if i0 == 0 || i0 % 2 != 0 {
        return Err(Error::InvalidArgument("certificate index i0 must be even and positive".into()));
    }
    if radius < 1.0 {
        return Err(Error::InvalidArgument("certificate radius must be at least 1".into()));
    }
    let i = i0 + 1;
    let b = partitions::count_with_max_block(i, i0);
    let lo = s0 - 1.1 * radius;
    let hi = s0 + 1.1 * radius;
    let mut c = 0.0f64;
    let mut deriv = phi.diff_symbolic_n(phi_var, 2);
    for _k in 1..=i {
        let (_, sup) = interval_argmax(&deriv, phi_var, lo, hi, 1024, 32)?;
        c = c.max(sup);
        deriv = deriv.diff_symbolic(phi_var);
    }
    let cert = M2Certificate { i0, i, s0, radius, b, c, m2: b as f64 * c };
    validate_m2(phi, phi_var, &cert)?;
    Ok(cert)
}

/// Check the remainder bound on random directions with ||u||_{i0} <= 1:
/// |D^i (phi' o (s0+u)) - phi''(s0+u) D^i u| must stay within
/// m2 (1 + ||u||)^i at every sampled point.
fn validate_m2(phi: &SmoothExpr, phi_var: &str, cert: &M2Certificate) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let phi1 = phi.diff_symbolic(phi_var);
    let phi2 = phi1.diff_symbolic(phi_var);
    let cfg = GridCfg { resolution: 512, refine_depth: 24 };
    let i = cert.i;
    for trial in 0..50 {
        let mut e = expr::konst(0.0);
        for k in 1..=4u32 {
            let phase = expr::mul(expr::konst(2.0 * PI * k as f64), expr::var("s"));
            let a: f64 = rng.gen_range(-1.0..1.0);
            let bq: f64 = rng.gen_range(-1.0..1.0);
            e = expr::add(e, expr::mul(expr::konst(a), expr::apply(expr::Func::Sin, phase.clone())));
            e = expr::add(e, expr::mul(expr::konst(bq), expr::apply(expr::Func::Cos, phase)));
        }
        let raw = PeriodicFn::new(e, "s")?;
        let sigma = seminorm_sup(&raw, cert.i0, cfg)?.value;
        if sigma == 0.0 {
            continue;
        }
        let rho: f64 = rng.gen_range(0.3..1.0);
        let u = raw.scale(rho / sigma);
        let unorm = seminorm_sup(&u, cert.i0, cfg)?.value;
        let shifted = expr::add(expr::konst(cert.s0), u.expr().clone());
        let composed = phi1.substitute(phi_var, &shifted);
        let composed = PeriodicFn::from_parts_unchecked(composed, "s");
        let budget = cert.m2 * (1.0 + unorm).powi(i as i32);
        for p in 0..9 {
            let s = p as f64 / 9.0;
            let lhs = composed.eval_jet(s, i)?.deriv(i);
            let uj = u.eval_jet(s, i)?;
            let leading = eval_at(&phi2, phi_var, cert.s0 + uj.value())? * uj.deriv(i);
            let remainder = (lhs - leading).abs();
            if remainder > budget + 1e-7 * (1.0 + lhs.abs()) {
                return Err(Error::CertificateInvalid(format!(
                    "remainder {remainder:.6e} exceeds budget {budget:.6e} on trial {trial} at s = {s}"
                )));
            }
        }
    }
    Ok(())
}

/// Smallest frequency n whose witness pushes the composed derivative
/// past `target`: with y = (2 pi n)^{1/2} both a*y - m2*(1 + 1/y)^i >
/// target and i0/y < 1 must hold. The left side is increasing in n, so
/// doubling plus bisection finds the exact threshold.
pub fn choose_n(a: f64, cert: &M2Certificate, i0: usize, target: f64) -> Result<u64> {
    if cert.i0 != i0 {
        return Err(Error::InvalidArgument("certificate was built for a different index".into()));
    }
    if a <= AFFINE_TOL {
        return Err(Error::NoWitness { a });
    }
    let i = cert.i as i32;
    let ok = |n: u64| {
        let y = (2.0 * PI * n as f64).sqrt();
        a * y - cert.m2 * (1.0 + 1.0 / y).powi(i) > target && (i0 as f64) < y
    };
    let mut hi = 1u64;
    while !ok(hi) {
        hi *= 2;
        if hi > MAX_FREQUENCY {
            return Err(Error::InvalidArgument(format!(
                "no witness frequency below 2^55 reaches target {target}"
            )));
        }
    }
    if hi == 1 {
        return Ok(1);
    }
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Witness found with certified lower bound above the claim.
    Violated,
    /// phi is affine at the base point, the claim may genuinely hold.
    NoWitness,
    /// No certified conclusion at the attempted frequency.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub claim: BoundedClaim,
    /// |phi''(s0)|.
    pub a: f64,
    pub m2: M2Certificate,
    /// Witness frequency, 0 when no witness exists.
    pub n: u64,
    /// Closed form ||u_n||_{i0} = (2 pi n)^{-1/2}.
    pub witness_norm_exact: f64,
    /// Grid measurement of the same seminorm.
    pub witness_norm: f64,
    /// Certified lower bound a y - m2 (1 + 1/y)^i for the composed
    /// derivative at s0, y = (2 pi n)^{1/2}.
    pub exact_lower: f64,
    /// Grid seminorm of phi' o (s0 + u_n) at index i0 + 1.
    pub numeric: SeminormValue,
    pub verdict: Verdict,
}

/// Run the full search: curvature, remainder certificate, frequency
/// selection, then independent numeric measurement of the witness.
pub fn falsify_bounded_claim(claim: &BoundedClaim, cfg: GridCfg) -> Result<WitnessReport> {
    let phi1 = claim.phi.diff_symbolic(&claim.phi_var);
    let phi2 = phi1.diff_symbolic(&claim.phi_var);
    let a = eval_at(&phi2, &claim.phi_var, claim.s0)?.abs();
    let cert = m2_bound(&claim.phi, &claim.phi_var, claim.s0, claim.i0, 1.0)?;
    let i = claim.output_index();

    if a <= AFFINE_TOL {
        return Ok(WitnessReport {
            claim: claim.clone(),
            a,
            m2: cert,
            n: 0,
            witness_norm_exact: 0.0,
            witness_norm: 0.0,
            exact_lower: 0.0,
            numeric: SeminormValue { value: 0.0, index: i, grid: cfg },
            verdict: Verdict::NoWitness,
        });
    }

    let mut n = choose_n(a, &cert, claim.i0, claim.bound + 1.0)?;
    // push the frequency up until the witness fits inside the delta ball
    if trig_witness_norm(n) >= claim.delta {
        let mut cand = (1.0 / (2.0 * PI * claim.delta * claim.delta)).floor() as u64 + 1;
        while trig_witness_norm(cand) >= claim.delta {
            cand += 1;
        }
        n = n.max(cand);
    }

    let scaled = 16usize.saturating_mul(n as usize);
    if scaled > MAX_GRID {
        return Err(Error::InvalidArgument(format!(
            "witness frequency {n} needs a verification grid beyond the supported size"
        )));
    }
    let wcfg = GridCfg { resolution: cfg.resolution.max(scaled), ..cfg };

    let u = build_trig_witness(n, claim.i0, claim.s0)?;
    let wnorm = seminorm_sup(&u, claim.i0, wcfg)?.value;
    let shifted = expr::add(expr::konst(claim.s0), u.expr().clone());
    let composed = PeriodicFn::from_parts_unchecked(phi1.substitute(&claim.phi_var, &shifted), "s");
    let numeric = seminorm_sup(&composed, i, wcfg)?;

    let y = (2.0 * PI * n as f64).sqrt();
    let exact_lower = a * y - cert.m2 * (1.0 + 1.0 / y).powi(i as i32);

    let verdict = if wnorm < claim.delta && exact_lower > claim.bound && numeric.value > claim.bound
    {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };

    Ok(WitnessReport {
        claim: claim.clone(),
        a,
        m2: cert,
        n,
        witness_norm_exact: trig_witness_norm(n),
        witness_norm: wnorm,
        exact_lower,
        numeric,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{add, konst, mul, pow, var};
    use approx::assert_relative_eq;

    #[test]
    fn claim_validation_rejects_bad_parameters() {
        let phi = pow(var("t"), 2);
        assert!(BoundedClaim::new(phi.clone(), "t", 0.0, 3, 10.0, 0.5).is_err());
        assert!(BoundedClaim::new(phi.clone(), "t", 0.0, 2, -1.0, 0.5).is_err());
        assert!(BoundedClaim::new(phi.clone(), "t", 0.0, 2, 10.0, 0.0).is_err());
        assert!(BoundedClaim::new(var("w"), "t", 0.0, 2, 10.0, 0.5).is_err());
        assert!(BoundedClaim::new(phi, "t", 0.0, 2, 10.0, 0.5).is_ok());
    }

    #[test]
    fn output_index_must_be_one_above_the_ball_index() {
        let phi = pow(var("t"), 2);
        let ok = BoundedClaim::with_output_index(phi.clone(), "t", 0.0, 2, 3, 10.0, 0.5);
        assert_eq!(ok.unwrap().output_index(), 3);
        let err = BoundedClaim::with_output_index(phi, "t", 0.0, 2, 4, 10.0, 0.5);
        assert!(matches!(err, Err(Error::InconsistentClaim { i: 4, expected: 3 })));
    }

    #[test]
    fn nonaffinity_scan_finds_the_strongest_curvature() {
        // (t^3 - t)'' = 6t, largest at the right endpoint of [-1, 2]
        let phi = crate::expr::sub(pow(var("t"), 3), var("t"));
        let scan = scan_nonaffinity(&phi, "t", (-1.0, 2.0), 256).unwrap();
        assert!(!scan.affine);
        assert_relative_eq!(scan.magnitude, 12.0, max_relative = 1e-9);
        assert_relative_eq!(scan.s0, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn nonaffinity_scan_flags_affine_functions() {
        let phi = add(mul(konst(3.0), var("t")), konst(1.0));
        let scan = scan_nonaffinity(&phi, "t", (-1.0, 1.0), 128).unwrap();
        assert!(scan.affine);
        assert_eq!(scan.magnitude, 0.0);
    }

    #[test]
    fn square_curvature_certificate_has_closed_form() {
        // phi = t^2: B counts the partitions of a 3-set with blocks of
        // size <= 2, and only phi'' = 2 survives among the derivatives
        let cert = m2_bound(&pow(var("t"), 2), "t", 0.6, 2, 1.0).unwrap();
        assert_eq!(cert.b, 4);
        assert_relative_eq!(cert.c, 2.0, max_relative = 1e-12);
        assert_relative_eq!(cert.m2, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn affine_certificate_is_zero() {
        let cert = m2_bound(&mul(konst(5.0), var("t")), "t", 0.0, 2, 1.0).unwrap();
        assert_eq!(cert.c, 0.0);
        assert_eq!(cert.m2, 0.0);
    }

    #[test]
    fn chosen_frequency_is_minimal() {
        let cert = m2_bound(&pow(var("t"), 2), "t", 0.6, 2, 1.0).unwrap();
        let target = 1001.0;
        let n = choose_n(2.0, &cert, 2, target).unwrap();
        let check = |n: u64| {
            let y = (2.0 * PI * n as f64).sqrt();
            2.0 * y - cert.m2 * (1.0 + 1.0 / y).powi(3) > target && y > 2.0
        };
        assert!(check(n));
        assert!(!check(n - 1));
        assert!((40_000..41_000).contains(&n), "n = {n}");
    }

    #[test]
    fn choose_n_refuses_flat_curvature() {
        let cert = m2_bound(&mul(konst(5.0), var("t")), "t", 0.0, 2, 1.0).unwrap();
        assert!(matches!(choose_n(0.0, &cert, 2, 10.0), Err(Error::NoWitness { .. })));
    }

    #[test]
    fn square_claim_is_violated_with_certified_chain() {
        let claim = BoundedClaim::new(pow(var("t"), 2), "t", 0.6, 2, 100.0, 0.8).unwrap();
        let report = falsify_bounded_claim(&claim, GridCfg::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Violated);
        assert_relative_eq!(report.a, 2.0, max_relative = 1e-12);
        // every link of the chain holds: admissible witness, certified
        // lower bound above the claim, numeric measurement above it too
        assert!(report.witness_norm < claim.delta);
        assert!(report.exact_lower > claim.bound);
        assert!(report.numeric.value > claim.bound);
        // the numeric seminorm is at least the certified lower bound up
        // to grid slack
        assert!(report.numeric.value > report.exact_lower * 0.99);
        assert_relative_eq!(report.witness_norm, report.witness_norm_exact, max_relative = 1e-9);
    }

    #[test]
    fn affine_claim_reports_no_witness() {
        let claim =
            BoundedClaim::new(add(mul(konst(3.0), var("t")), konst(2.0)), "t", 0.0, 2, 5.0, 0.5)
                .unwrap();
        let report = falsify_bounded_claim(&claim, GridCfg::default()).unwrap();
        assert_eq!(report.verdict, Verdict::NoWitness);
        assert_eq!(report.n, 0);
    }

    #[test]
    fn tight_delta_pushes_the_frequency_up() {
        // delta = 0.004 forces (2 pi n)^{-1/2} < 0.004, n > 9947
        let claim = BoundedClaim::new(pow(var("t"), 2), "t", 0.0, 2, 10.0, 0.004).unwrap();
        let report = falsify_bounded_claim(&claim, GridCfg::default()).unwrap();
        assert!(report.n > 9_900, "n = {}", report.n);
        assert!(report.witness_norm < 0.004);
        assert_eq!(report.verdict, Verdict::Violated);
    }

    #[test]
    fn reports_are_deterministic() {
        let claim = BoundedClaim::new(pow(var("t"), 2), "t", 0.3, 2, 50.0, 0.5).unwrap();
        let r1 = falsify_bounded_claim(&claim, GridCfg::default()).unwrap();
        let r2 = falsify_bounded_claim(&claim, GridCfg::default()).unwrap();
        assert_eq!(r1.n, r2.n);
        assert_eq!(r1.witness_norm.to_bits(), r2.witness_norm.to_bits());
        assert_eq!(r1.numeric.value.to_bits(), r2.numeric.value.to_bits());
        assert_eq!(r1.exact_lower.to_bits(), r2.exact_lower.to_bits());
    }
}
