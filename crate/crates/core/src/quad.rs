//! Composite Gauss-Legendre quadrature. Sixteen nodes per panel are
//! exact for polynomials through degree 31; panels are halved until two
//! successive composite values agree to the requested tolerance.

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::sync::OnceLock;

const N: usize = 16;
const MAX_LEVELS: usize = 12;

/// Legendre P_n and its derivative at x by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights on [-1, 1], computed once by Newton iteration from
/// Chebyshev initial guesses.
fn rule() -> &'static ([f64; N], [f64; N]) {
    static RULE: OnceLock<([f64; N], [f64; N])> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut nodes = [0.0; N];
        let mut weights = [0.0; N];
        for (k, (node, weight)) in nodes.iter_mut().zip(weights.iter_mut()).enumerate() {
            let mut x = (PI * (k as f64 + 0.75) / (N as f64 + 0.5)).cos();
            for _ in 0..64 {
                let (p, dp) = legendre(N, x);
                let step = p / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(N, x);
            *node = x;
            *weight = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

fn composite<F>(f: &F, a: f64, b: f64, panels: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (nodes, weights) = rule();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            acc += w * f(mid + 0.5 * h * x)?;
        }
        total += 0.5 * h * acc;
    }
    Ok(total)
}

/// Integrate f over [a, b] to relative tolerance `tol`, panel count
/// doubling until two successive levels agree.
pub fn integrate<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let mut prev = composite(f, a, b, 1)?;
    let mut panels = 2;
    for _ in 0..MAX_LEVELS {
        let next = composite(f, a, b, panels)?;
        if (next - prev).abs() <= tol * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
        panels *= 2;
    }
    Err(Error::QuadratureDiverged { tol, levels: MAX_LEVELS })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nodes_are_symmetric_and_weights_sum_to_two() {
        let (nodes, weights) = rule();
        assert_relative_eq!(weights.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
        for k in 0..N / 2 {
            assert_relative_eq!(nodes[k], -nodes[N - 1 - k], max_relative = 1e-14);
            assert_relative_eq!(weights[k], weights[N - 1 - k], max_relative = 1e-13);
        }
    }

    #[test]
    fn single_panel_is_exact_for_degree_31() {
        // integral of x^31 + x^30 over [-1, 1] is 2/31
        let q = composite(&|x: f64| Ok(x.powi(31) + x.powi(30)), -1.0, 1.0, 1).unwrap();
        assert_relative_eq!(q, 2.0 / 31.0, max_relative = 1e-13);
    }

    #[test]
    fn smooth_integrals_match_closed_forms() {
        let q = integrate(&|x: f64| Ok(x.exp()), 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(q, 1f64.exp() - 1.0, max_relative = 1e-12);
        let q = integrate(&|x: f64| Ok((5.0 * x).sin()), 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(q, (1.0 - (10f64).cos()) / 5.0, max_relative = 1e-11);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(&|_| Ok(1.0), 0.7, 0.7, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn oscillatory_integrand_converges_with_enough_panels() {
        let q = integrate(&|x: f64| Ok((40.0 * x).cos()), 0.0, 1.0, 1e-10).unwrap();
        assert_relative_eq!(q, (40f64).sin() / 40.0, max_relative = 1e-9);
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = integrate(
            &|x: f64| {
                if x > 0.5 {
                    Err(Error::InvalidArgument("pole".into()))
                } else {
                    Ok(x)
                }
            },
            0.0,
            1.0,
            1e-10,
        );
        assert!(r.is_err());
    }
}
