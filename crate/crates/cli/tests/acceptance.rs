//! End-to-end acceptance checks, one test per criterion. Each prints a
//! single pass/fail line; tolerances are pinned as constants next to the
//! checks that use them.

use std::f64::consts::PI;
use std::panic::AssertUnwindSafe;
use std::process::Command;

use ff_core::expr::{add, apply, konst, mul, neg, pow, sub, var, Func, SmoothExpr};
use ff_core::falsify::{falsify_bounded_claim, m2_bound, BoundedClaim, Verdict};
use ff_core::gateaux::{cb_continuity_probe, gateaux_quotient, loglog_slope, QuotientResidual};
use ff_core::jet::jet_compose;
use ff_core::seminorm::{seminorm_sup, GridCfg};
use ff_core::smooth::{build_bump_monomial, build_trig_witness, bump_bound_check, eval_jet, PeriodicFn};
use ff_core::transport::{
    cyl_add, cyl_apply, cyl_integral, cyl_mul, cyl_neg, cyl_sub, d_e, g_seminorm, h_apply,
    h_gateaux, op_i, op_s, transport_growth_demo, CylExpr, CylinderFn, GCfg,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn criterion<F: FnOnce()>(n: usize, name: &str, body: F) {
    let result = std::panic::catch_unwind(AssertUnwindSafe(body));
    println!("acceptance {n} {name}: {}", if result.is_ok() { "pass" } else { "FAIL" });
    if let Err(p) = result {
        std::panic::resume_unwind(p);
    }
}

fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs().max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------- 1

const JET_ORACLE_REL: f64 = 1e-11;

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> SmoothExpr {
    if depth == 0 {
        return if rng.gen_bool(0.5) { var("t") } else { konst(rng.gen_range(-1.2..1.2)) };
    }
    let a = random_expr(rng, depth - 1);
    let b = random_expr(rng, depth - 1);
    match rng.gen_range(0..8) {
        0 => add(a, b),
        1 => sub(a, b),
        2 => mul(a, b),
        3 => neg(a),
        4 => apply(Func::Sin, a),
        5 => apply(Func::Cos, a),
        6 => apply(Func::Exp, mul(konst(0.4), a)),
        _ => pow(a, rng.gen_range(2..=3)),
    }
}

#[test]
fn acceptance_1_jet_composition_matches_symbolic_oracle() {
    criterion(1, "jet composition vs symbolic oracle", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE0001);
        for _ in 0..100 {
            let f = random_expr(&mut rng, 2);
            let g = random_expr(&mut rng, 2);
            let p: f64 = rng.gen_range(-0.8..0.8);

            let inner = eval_jet(&g, "t", p, 8).unwrap();
            let outer = eval_jet(&f, "t", inner.value(), 8).unwrap();
            let composed = jet_compose(outer.derivs(), &inner).unwrap();

            let h = f.substitute("t", &g);
            let mut oracle = Vec::with_capacity(9);
            let mut d = h;
            for k in 0..=8usize {
                oracle.push(d.eval_scalar(&[("t", p)]).unwrap());
                if k < 8 {
                    d = d.diff_symbolic("t");
                }
            }
            // comparisons are relative to the derivative scale of the
            // pair so exact zeros do not demand exact zeros of the
            // other path
            let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (k, want) in oracle.iter().enumerate() {
                let err = (composed.deriv(k) - want).abs();
                let allowed = JET_ORACLE_REL * want.abs().max(1e-3 * scale);
                assert!(
                    err <= allowed,
                    "order {k}: jet {} vs symbolic {} (err {err:.3e}, allowed {allowed:.3e})",
                    composed.deriv(k),
                    want
                );
            }
        }
    });
}

// ---------------------------------------------------------------- 2

const SLOPE_TOL: f64 = 0.1;
const QUOTIENT_STEPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

fn periodic(text_freq: u32, cosine: bool) -> PeriodicFn {
    let phase = mul(konst(2.0 * PI * text_freq as f64), var("s"));
    let f = if cosine { Func::Cos } else { Func::Sin };
    PeriodicFn::new(apply(f, phase), "s").unwrap()
}

#[test]
fn acceptance_2_difference_quotients_converge_at_first_order() {
    criterion(2, "difference quotient residual slope", || {
        let triples: [(SmoothExpr, PeriodicFn, PeriodicFn, usize); 5] = [
            (apply(Func::Sin, var("t")), periodic(1, false), periodic(1, true), 2),
            (pow(var("t"), 2), periodic(1, false), periodic(2, false), 3),
            (apply(Func::Exp, mul(konst(0.5), var("t"))), periodic(1, true), periodic(1, false), 1),
            (sub(pow(var("t"), 3), var("t")), periodic(2, false), periodic(1, true), 0),
            (
                apply(Func::Cos, var("t")),
                PeriodicFn::new(
                    add(periodic(1, false).expr().clone(), mul(konst(0.3), periodic(2, true).expr().clone())),
                    "s",
                )
                .unwrap(),
                periodic(3, true),
                2,
            ),
        ];
        for (phi, x, u, index) in &triples {
            let cfg = GridCfg::default();
            let residuals: Vec<QuotientResidual> = QUOTIENT_STEPS
                .iter()
                .map(|&h| gateaux_quotient(phi, "t", x, u, h, *index, cfg).unwrap())
                .collect();
            let slope = loglog_slope(&residuals).unwrap();
            assert!(
                (slope - 1.0).abs() <= SLOPE_TOL,
                "index {index}: slope {slope} outside 1 +- {SLOPE_TOL}"
            );
        }
    });
}

// ---------------------------------------------------------------- 3

const WITNESS_NORM_ABS: f64 = 1e-9;
const TOP_DERIV_REL: f64 = 1e-9;
const COMPOSED_SEMINORM_REL: f64 = 1e-6;

#[test]
fn acceptance_3_square_claim_is_violated_with_certified_witness() {
    criterion(3, "square claim violated by frequency witness", || {
        let claim = BoundedClaim::new(pow(var("t"), 2), "t", 0.0, 2, 1000.0, 0.5).unwrap();
        let rep = falsify_bounded_claim(&claim, GridCfg::default()).unwrap();

        assert_eq!(rep.verdict, Verdict::Violated);
        assert!(
            (40000..=41000).contains(&rep.n),
            "witness frequency {} outside the expected band",
            rep.n
        );

        let closed_norm = (2.0 * PI * rep.n as f64).powf(-0.5);
        assert!(
            (rep.witness_norm - closed_norm).abs() <= WITNESS_NORM_ABS,
            "measured witness norm {} vs closed form {closed_norm}",
            rep.witness_norm
        );
        assert!(rep.witness_norm < claim.delta);

        // top derivative of the composition at the base point
        let u = build_trig_witness(rep.n, 2, 0.0).unwrap();
        let composed = claim
            .phi
            .diff_symbolic("t")
            .substitute("t", &add(konst(0.0), u.expr().clone()));
        let top = eval_jet(&composed, "s", 0.0, 3).unwrap().deriv(3).abs();
        let want = 2.0 * (2.0 * PI * rep.n as f64).sqrt();
        assert!(rel_close(top, want, TOP_DERIV_REL), "top derivative {top} vs {want}");
        assert!(rel_close(rep.numeric.value, want, COMPOSED_SEMINORM_REL));

        // the input seminorm of the witness stays below one while the
        // output explodes
        assert!(claim.i0 as f64 * closed_norm < 1.0);
    });
}

// ---------------------------------------------------------------- 4

#[test]
fn acceptance_4_remainder_certificates_validate_and_match_closed_forms() {
    criterion(4, "remainder certificate spot validation", || {
        // construction revalidates on 50 random smooth functions and
        // fails loudly on any violation
        let square = m2_bound(&pow(var("t"), 2), "t", 0.0, 2, 1.0).unwrap();
        assert_eq!(square.b, 4);
        assert_eq!(square.c, 2.0);
        assert_eq!(square.m2, 8.0);

        m2_bound(&apply(Func::Sin, var("t")), "t", 0.3, 2, 1.0).unwrap();
        m2_bound(&sub(pow(var("t"), 3), var("t")), "t", -0.2, 4, 1.0).unwrap();
    });
}

// ---------------------------------------------------------------- 5

const GROWTH_VALUE_REL: f64 = 1e-6;
const GROWTH_RATIO_REL: f64 = 1e-5;
const AFFINE_DISTANCE_ABS: f64 = 1e-13;

#[test]
fn acceptance_5_composed_seminorm_follows_the_square_root_growth_law() {
    criterion(5, "seminorm growth across frequency decades", || {
        let phi1 = pow(var("t"), 2).diff_symbolic("t");
        let mut values = Vec::new();
        for n in [100u64, 10_000, 1_000_000] {
            let u = build_trig_witness(n, 2, 0.0).unwrap();
            let composed = PeriodicFn::new(phi1.substitute("t", u.expr()), "s").unwrap();
            let cfg = GridCfg { resolution: 16 * n as usize, refine_depth: 32 };
            let value = seminorm_sup(&composed, 3, cfg).unwrap().value;
            let want = 2.0 * (2.0 * PI * n as f64).sqrt();
            assert!(rel_close(value, want, GROWTH_VALUE_REL), "n {n}: {value} vs {want}");
            values.push(value);
        }
        assert!(rel_close(values[1] / values[0], 10.0, GROWTH_RATIO_REL));
        assert!(rel_close(values[2] / values[1], 10.0, GROWTH_RATIO_REL));

        // affine control: the derivative multiplier is frozen, so every
        // admissible perturbation moves it nowhere
        let affine = add(mul(konst(3.0), var("t")), konst(1.0));
        let x = periodic(1, false);
        let probe =
            cb_continuity_probe(&affine, "t", &x, 2, 0.5, 3, 5, 1, GridCfg::default()).unwrap();
        assert!(probe.admissible >= 4);
        assert!(probe.max_distance <= AFFINE_DISTANCE_ABS);
    });
}

// ---------------------------------------------------------------- 6

const ORIGIN_REL: f64 = 1e-10;
const BUMP_SCALES: [f64; 3] = [0.5, 0.1, 0.01];

fn multi_indices(dim: usize, budget: u32) -> Vec<Vec<u32>> {
    if dim == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for head in 0..=budget {
        for mut tail in multi_indices(dim - 1, budget - head) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[test]
fn acceptance_6_bump_monomials_hit_factorials_and_keep_scaled_bounds() {
    criterion(6, "bump monomial factorial and scale transfer", || {
        for dim in 1..=3usize {
            for alpha in multi_indices(dim, 4) {
                let f = build_bump_monomial(dim, &alpha, 1.0).unwrap();
                let got = f.partial_at(&alpha, &vec![0.0; dim]).unwrap();
                let want: f64 = alpha.iter().map(|&k| (1..=k).map(f64::from).product::<f64>()).product();
                assert!(
                    rel_close(got, want, ORIGIN_REL),
                    "alpha {alpha:?}: origin partial {got} vs {want}"
                );

                let calibration = bump_bound_check(&f, &alpha, 1.0, f64::INFINITY, 256).unwrap();
                let bound = calibration.max_ratio * 1.01;
                for &delta in &BUMP_SCALES {
                    let scaled = build_bump_monomial(dim, &alpha, delta).unwrap();
                    let report = bump_bound_check(&scaled, &alpha, delta, bound, 256).unwrap();
                    assert!(
                        report.passes,
                        "alpha {alpha:?} delta {delta}: ratio {} above calibrated {bound}",
                        report.max_ratio
                    );
                }
            }
        }
    });
}

// ---------------------------------------------------------------- 7

const INVERSION_GRID_TOL: f64 = 1e-8;
const INTEGRAL_CLOSED_FORM_TOL: f64 = 1e-9;

fn random_cylinder(rng: &mut ChaCha8Rng, depth: usize) -> CylExpr {
    use CylExpr::{Const, Eta, T};
    if depth == 0 {
        return match rng.gen_range(0..4) {
            0 => Const(rng.gen_range(-2.0..2.0)),
            1 => T,
            2 => cyl_apply(
                Func::Sin,
                cyl_add(cyl_mul(Const(2.0 * PI), Eta), Const(rng.gen_range(0.0..1.0))),
            ),
            _ => op_s(&periodic(rng.gen_range(1..3), false)).expr().clone(),
        };
    }
    let a = random_cylinder(rng, depth - 1);
    let b = random_cylinder(rng, depth - 1);
    match rng.gen_range(0..5) {
        0 => cyl_add(a, b),
        1 => cyl_sub(a, b),
        2 => cyl_mul(a, b),
        3 => cyl_neg(a),
        _ => cyl_integral(a),
    }
}

#[test]
fn acceptance_7_transport_identities_and_derivative_convergence() {
    criterion(7, "transport inversion, closed form, derivative slope", || {
        // the diagonal derivative undoes the characteristic integral
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE0007);
        for _ in 0..20 {
            let v = CylinderFn::new(random_cylinder(&mut rng, 2)).unwrap();
            let roundtrip = d_e(&op_i(&v));
            for a in 0..5 {
                for b in 0..5 {
                    let (t, eta) = (a as f64 / 4.0, b as f64 / 4.0);
                    let err = (roundtrip.eval(t, eta).unwrap() - v.eval(t, eta).unwrap()).abs();
                    assert!(err <= INVERSION_GRID_TOL, "inversion error {err:.3e} at ({t}, {eta})");
                }
            }
        }

        // closed form of the characteristic integral of cos(2 pi eta)
        let v = CylinderFn::new(cyl_apply(
            Func::Cos,
            cyl_mul(CylExpr::Const(2.0 * PI), CylExpr::Eta),
        ))
        .unwrap();
        let integral = op_i(&v);
        for a in 0..7 {
            for b in 0..7 {
                let (t, eta) = (a as f64 / 6.0, b as f64 / 6.0);
                let want =
                    ((2.0 * PI * eta).sin() - (2.0 * PI * (eta - t)).sin()) / (2.0 * PI);
                let got = integral.eval(t, eta).unwrap();
                assert!(
                    (got - want).abs() <= INTEGRAL_CLOSED_FORM_TOL,
                    "integral {got} vs {want} at ({t}, {eta})"
                );
            }
        }

        // difference quotients of the characteristic form converge to
        // its directional derivative at first order
        let phi3 = pow(var("xi"), 2);
        let x = PeriodicFn::zero("s");
        let y = op_s(&periodic(1, false));
        let v1 = CylinderFn::new(cyl_add(
            CylExpr::Const(1.0),
            cyl_mul(
                CylExpr::Const(0.5),
                cyl_apply(Func::Cos, cyl_mul(CylExpr::Const(2.0 * PI), CylExpr::Eta)),
            ),
        ))
        .unwrap();
        let (_, base) = h_apply(&phi3, &x, &y).unwrap();
        let (_, analytic) = h_gateaux(&phi3, &x, &y, &v1).unwrap();
        let mut residuals = Vec::new();
        for step in [1e-1, 1e-2, 1e-3] {
            let moved = y.add(&v1.scale(step));
            let (_, shifted) = h_apply(&phi3, &x, &moved).unwrap();
            let quotient = cyl_mul(
                CylExpr::Const(1.0 / step),
                cyl_sub(shifted.expr().clone(), base.expr().clone()),
            );
            let diff = CylinderFn::new(cyl_sub(quotient, analytic.expr().clone())).unwrap();
            let residual = g_seminorm(&x, &diff, 2, GCfg::default()).unwrap().value;
            residuals.push(QuotientResidual { step, index: 2, residual });
        }
        let slope = loglog_slope(&residuals).unwrap();
        assert!((slope - 1.0).abs() <= SLOPE_TOL, "slope {slope} outside 1 +- {SLOPE_TOL}");
    });
}

// ---------------------------------------------------------------- 8

const SQRT_TEN_RATIO_TOL: f64 = 0.15;

#[test]
fn acceptance_8_perturbation_growth_table_scales_like_sqrt_delta() {
    criterion(8, "growth table square-root scaling", || {
        let table = transport_growth_demo(
            &pow(var("xi"), 2),
            &CylinderFn::zero(),
            0.5,
            2,
            &[0.1, 0.01],
        )
        .unwrap();
        assert!(table.nonlinear);
        let [small, tiny] = table.rows[..] else { panic!("expected two rows") };

        let norm_ratio = small.g_seminorm_i0 / tiny.g_seminorm_i0;
        let dist_ratio = tiny.derivative_distance / small.derivative_distance;
        let want = 10.0f64.sqrt();
        assert!(
            (norm_ratio - want).abs() <= SQRT_TEN_RATIO_TOL * want,
            "seminorm ratio {norm_ratio} vs sqrt(10)"
        );
        assert!(
            (dist_ratio - want).abs() <= SQRT_TEN_RATIO_TOL * want,
            "distance ratio {dist_ratio} vs sqrt(10)"
        );
        assert!(rel_close(small.exact_partial_lower, 6.0 / 0.1f64.sqrt(), 1e-12));

        // affine right-hand side: the derivative cannot move at all
        let affine = transport_growth_demo(
            &var("xi"),
            &CylinderFn::zero(),
            0.5,
            2,
            &[0.1, 0.01],
        )
        .unwrap();
        assert!(!affine.nonlinear);
        for row in &affine.rows {
            assert_eq!(row.derivative_distance, 0.0);
        }
    });
}

// ---------------------------------------------------------------- 9

fn run_ff(threads: &str, args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_ff"))
        .args(args)
        .env("FF_THREADS", threads)
        .output()
        .expect("spawn ff");
    assert!(
        out.status.success(),
        "ff {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 report")
}

fn report_suite(threads: &str) -> String {
    let mut all = String::new();
    all += &run_ff(
        threads,
        &["falsify", "--phi", "t^2", "--s0", "0", "--i0", "2", "--bound-M", "1000", "--delta", "0.5", "--seed", "11"],
    );
    all += &run_ff(
        threads,
        &["gateaux-check", "--phi", "sin(t)", "--x", "sin(2*pi*s)", "--u", "cos(2*pi*s)", "--index", "2", "--probes", "4", "--seed", "11"],
    );
    all += &run_ff(threads, &["bump-check", "--alpha", "2,1", "--seed", "11"]);
    all += &run_ff(threads, &["transport-demo", "--deltas", "0.1,0.01", "--seed", "11"]);
    all += &run_ff(threads, &["seminorm", "--f", "sin(2*pi*s)", "--index", "3", "--seed", "11"]);
    all
}

#[test]
fn acceptance_9_reports_are_byte_identical_across_runs_and_threads() {
    criterion(9, "byte-identical reports across runs and thread counts", || {
        let first = report_suite("1");
        let second = report_suite("1");
        let wide_first = report_suite("4");
        let wide_second = report_suite("4");
        assert!(first == second, "single-thread runs differ");
        assert!(wide_first == wide_second, "multi-thread runs differ");
        assert!(first == wide_first, "thread count changed a reported byte");
        assert!(first.contains("\"verdict\": \"violated\""));
        assert!(first.contains("\"verdict\": \"verified\""));
    });
}
