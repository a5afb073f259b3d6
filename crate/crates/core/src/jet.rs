//! Truncated jets: a function germ stored as its raw derivative values
//! D^0 z, .., D^K z at a base point. Arithmetic is exact in the sense that
//! every coefficient appearing in the recurrences is an integer binomial,
//! so integer-valued inputs produce integer-valued outputs bit for bit.

use crate::error::{Error, Result};
use smallvec::SmallVec;

/// Raw derivatives stay inline up to order 11; higher orders spill.
type Derivs = SmallVec<[f64; 12]>;

/// Highest order the binomial table supports.
pub const MAX_ORDER: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    base: f64,
    derivs: Derivs,
}

impl Jet {
    /// Jet with explicitly given raw derivatives `[z, Dz, .., D^K z]`.
    pub fn from_derivs(base: f64, derivs: &[f64]) -> Jet {
        assert!(!derivs.is_empty(), "a jet carries at least its value");
        assert!(derivs.len() - 1 <= MAX_ORDER);
        Jet { base, derivs: Derivs::from_slice(derivs) }
    }

    /// Jet of the constant function c.
    pub fn constant(base: f64, c: f64, order: usize) -> Jet {
        let mut derivs = Derivs::from_elem(0.0, order + 1);
        derivs[0] = c;
        Jet { base, derivs }
    }

    /// Jet of the identity s -> s at `base`.
    pub fn variable(base: f64, order: usize) -> Jet {
        let mut derivs = Derivs::from_elem(0.0, order + 1);
        derivs[0] = base;
        if order >= 1 {
            derivs[1] = 1.0;
        }
        Jet { base, derivs }
    }

    pub fn base_point(&self) -> f64 {
        self.base
    }

    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.derivs[0]
    }

    /// Raw derivative D^l at the base point.
    pub fn deriv(&self, l: usize) -> f64 {
        self.derivs[l]
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.base != other.base {
            return Err(Error::BasePointMismatch { left: self.base, right: other.base });
        }
        Ok(())
    }
}

/// Binomial coefficients C(n, k) for n <= MAX_ORDER, exact in f64.
fn binom(n: usize, k: usize) -> f64 {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![vec![0.0; MAX_ORDER + 1]; MAX_ORDER + 1];
        for n in 0..=MAX_ORDER {
            t[n][0] = 1.0;
            for k in 1..=n {
                t[n][k] = t[n - 1][k - 1] + if k <= n - 1 { t[n - 1][k] } else { 0.0 };
            }
        }
        t
    });
    table[n][k]
}

/// Entrywise sum. Orders must match, as must base points.
pub fn jet_add(a: &Jet, b: &Jet) -> Result<Jet> {
    a.check_compatible(b)?;
    assert_eq!(a.order(), b.order(), "jet orders must agree");
    let derivs = a.derivs.iter().zip(&b.derivs).map(|(x, y)| x + y).collect();
    Ok(Jet { base: a.base, derivs })
}

pub fn jet_sub(a: &Jet, b: &Jet) -> Result<Jet> {
    a.check_compatible(b)?;
    assert_eq!(a.order(), b.order(), "jet orders must agree");
    let derivs = a.derivs.iter().zip(&b.derivs).map(|(x, y)| x - y).collect();
    Ok(Jet { base: a.base, derivs })
}

pub fn jet_scale(a: &Jet, c: f64) -> Jet {
    Jet { base: a.base, derivs: a.derivs.iter().map(|x| c * x).collect() }
}

pub fn jet_neg(a: &Jet) -> Jet {
    jet_scale(a, -1.0)
}

/// Leibniz product: D^k(fg) = sum_l C(k,l) D^l f D^(k-l) g.
pub fn jet_mul(a: &Jet, b: &Jet) -> Result<Jet> {
    a.check_compatible(b)?;
    assert_eq!(a.order(), b.order(), "jet orders must agree");
    let order = a.order();
    let mut derivs = Derivs::from_elem(0.0, order + 1);
    for k in 0..=order {
        let mut acc = 0.0;
        for l in 0..=k {
            acc += binom(k, l) * a.derivs[l] * b.derivs[k - l];
        }
        derivs[k] = acc;
    }
    Ok(Jet { base: a.base, derivs })
}

/// Quotient by the Leibniz recurrence solved for the numerator:
/// D^k(f/g) = (D^k f - sum_{l<k} C(k,l) D^l(f/g) D^(k-l) g) / g.
/// `ctx` names the offending expression if g vanishes at the base point.
pub fn jet_div(a: &Jet, b: &Jet, ctx: &str) -> Result<Jet> {
    a.check_compatible(b)?;
    assert_eq!(a.order(), b.order(), "jet orders must agree");
    if b.value() == 0.0 {
        return Err(Error::ZeroDenominator { expr: ctx.to_string(), point: b.base });
    }
    let order = a.order();
    let mut derivs = Derivs::from_elem(0.0, order + 1);
    for k in 0..=order {
        let mut acc = a.derivs[k];
        for l in 0..k {
            acc -= binom(k, l) * derivs[l] * b.derivs[k - l];
        }
        derivs[k] = acc / b.derivs[0];
    }
    Ok(Jet { base: a.base, derivs })
}

/// Chain rule to arbitrary order. `outer` holds the derivative values
/// phi^(0), .., phi^(m) of the outer function taken at `inner.value()`,
/// with m at least `inner.order()`.
///
/// Implemented through the partial Bell polynomial recurrence in raw
/// derivatives,
///   B[n][k] = sum_j C(n-1, j-1) D^j z B[n-j][k-1],
/// whose coefficients are integers; the k = 1 term contributes exactly
/// phi'(z) D^n z, so the top entry depends on D^n z only through that
/// single product.
pub fn jet_compose(outer: &[f64], inner: &Jet) -> Result<Jet> {
    let order = inner.order();
    if outer.len() < order + 1 {
        return Err(Error::OuterTooShort { got: outer.len(), order, need: order + 1 });
    }
    let mut bell = vec![vec![0.0; order + 1]; order + 1];
    bell[0][0] = 1.0;
    for n in 1..=order {
        for k in 1..=n {
            let mut acc = 0.0;
            for j in 1..=(n - k + 1) {
                let factor = bell[n - j][k - 1];
                if factor != 0.0 {
                    acc += binom(n - 1, j - 1) * inner.derivs[j] * factor;
                }
            }
            bell[n][k] = acc;
        }
    }
    let mut derivs = Derivs::from_elem(0.0, order + 1);
    derivs[0] = outer[0];
    for n in 1..=order {
        // k >= 2 terms first; the leading phi' D^n z enters as one product
        let mut rest = 0.0;
        for k in 2..=n {
            rest += outer[k] * bell[n][k];
        }
        derivs[n] = rest + outer[1] * inner.derivs[n];
    }
    Ok(Jet { base: inner.base, derivs })
}

/// Integer power by repeated multiplication.
pub fn jet_powi(a: &Jet, n: u32) -> Jet {
    let order = a.order();
    let mut acc = Jet::constant(a.base, 1.0, order);
    for _ in 0..n {
        acc = jet_mul(&acc, a).expect("same base point");
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent route: sum phi^(|pi|)(z) prod_B D^|B| z over all set
    /// partitions pi of {1..n}. Block sizes enter via their cardinality
    /// only, so partitions of index sets translate directly.
    fn compose_by_partitions(outer: &[f64], inner: &Jet) -> Jet {
        let order = inner.order();
        let mut derivs = vec![0.0; order + 1];
        derivs[0] = outer[0];
        for n in 1..=order {
            let mut acc = 0.0;
            for p in partitions::enumerate(n) {
                let mut term = outer[p.len()];
                for block in &p {
                    term *= inner.deriv(block.len());
                }
                acc += term;
            }
            derivs[n] = acc;
        }
        Jet::from_derivs(inner.base_point(), &derivs)
    }

    fn random_jet(rng: &mut ChaCha8Rng, base: f64, order: usize) -> Jet {
        let derivs: Vec<f64> = (0..=order).map(|_| rng.gen_range(-2.0..2.0)).collect();
        Jet::from_derivs(base, &derivs)
    }

    // ══════════════════════════════════════════════════════════════════
    // products
    // ══════════════════════════════════════════════════════════════════

    #[test]
    fn product_of_monomials_is_the_monomial_product() {
        // s^2 * s^3 = s^5 at s = 1: derivatives 1, 5, 20, 60
        let a = Jet::from_derivs(1.0, &[1.0, 2.0, 2.0, 0.0]);
        let b = Jet::from_derivs(1.0, &[1.0, 3.0, 6.0, 6.0]);
        let p = jet_mul(&a, &b).unwrap();
        assert_eq!(p.derivs(), &[1.0, 5.0, 20.0, 60.0]);
    }

    #[test]
    fn product_against_symbolic_values() {
        // sin * exp at 0.3, order 4, closed-form derivatives
        let s = 0.3f64;
        let sinj = Jet::from_derivs(s, &[s.sin(), s.cos(), -s.sin(), -s.cos(), s.sin()]);
        let expj = Jet::from_derivs(s, &[s.exp(); 5]);
        let p = jet_mul(&sinj, &expj).unwrap();
        // D^k(e^s sin s) = e^s * 2^(k/2) sin(s + k pi/4)
        for k in 0..=4 {
            let expect = s.exp() * 2f64.powf(k as f64 / 2.0) * (s + k as f64 * std::f64::consts::FRAC_PI_4).sin();
            assert_relative_eq!(p.deriv(k), expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn mul_commutes_and_associates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let order = rng.gen_range(0..=8);
            let a = random_jet(&mut rng, 0.5, order);
            let b = random_jet(&mut rng, 0.5, order);
            let c = random_jet(&mut rng, 0.5, order);
            let ab = jet_mul(&a, &b).unwrap();
            let ba = jet_mul(&b, &a).unwrap();
            for k in 0..=order {
                assert_relative_eq!(ab.deriv(k), ba.deriv(k), max_relative = 1e-13, epsilon = 1e-13);
            }
            let ab_c = jet_mul(&ab, &c).unwrap();
            let a_bc = jet_mul(&a, &jet_mul(&b, &c).unwrap()).unwrap();
            for k in 0..=order {
                assert_relative_eq!(ab_c.deriv(k), a_bc.deriv(k), max_relative = 1e-13, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn mismatched_base_points_are_rejected() {
        let a = Jet::variable(0.0, 2);
        let b = Jet::variable(1.0, 2);
        assert!(matches!(jet_mul(&a, &b), Err(Error::BasePointMismatch { .. })));
        assert!(matches!(jet_add(&a, &b), Err(Error::BasePointMismatch { .. })));
    }

    // ══════════════════════════════════════════════════════════════════
    // composition
    // ══════════════════════════════════════════════════════════════════

    #[test]
    fn exp_of_sin_at_zero() {
        let inner = Jet::from_derivs(0.0, &[0.0, 1.0, 0.0, -1.0]);
        let outer = [1.0, 1.0, 1.0, 1.0]; // exp at 0
        let c = jet_compose(&outer, &inner).unwrap();
        assert_eq!(c.derivs(), &[1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn square_of_sin_at_zero() {
        let inner = Jet::from_derivs(0.0, &[0.0, 1.0, 0.0, -1.0]);
        let outer = [0.0, 0.0, 2.0, 0.0]; // t^2 at 0
        let c = jet_compose(&outer, &inner).unwrap();
        assert_eq!(c.derivs(), &[0.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn composition_matches_partition_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..150 {
            let order = rng.gen_range(1..=8);
            let inner = random_jet(&mut rng, 0.25, order);
            let outer: Vec<f64> = (0..=order).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let fast = jet_compose(&outer, &inner).unwrap();
            let slow = compose_by_partitions(&outer, &inner);
            for k in 0..=order {
                assert_relative_eq!(fast.deriv(k), slow.deriv(k), max_relative = 1e-11, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn top_entry_depends_linearly_on_top_inner_derivative() {
        // Integer jets keep every intermediate term an exact integer, so
        // the difference must be bit-exact, not merely close.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let order = rng.gen_range(1..=8usize);
            let derivs: Vec<f64> = (0..=order).map(|_| rng.gen_range(-3i32..=3) as f64).collect();
            let outer: Vec<f64> = (0..=order).map(|_| rng.gen_range(-3i32..=3) as f64).collect();
            let d_old = derivs[order];
            let d_new = rng.gen_range(-3i32..=3) as f64;
            let mut changed = derivs.clone();
            changed[order] = d_new;
            let a = jet_compose(&outer, &Jet::from_derivs(0.5, &derivs)).unwrap();
            let b = jet_compose(&outer, &Jet::from_derivs(0.5, &changed)).unwrap();
            assert_eq!(a.deriv(order) - b.deriv(order), outer[1] * (d_old - d_new));
            for k in 0..order {
                assert_eq!(a.deriv(k), b.deriv(k));
            }
        }
    }

    #[test]
    fn short_outer_sequence_is_rejected() {
        let inner = Jet::variable(0.0, 3);
        assert!(matches!(
            jet_compose(&[1.0, 1.0], &inner),
            Err(Error::OuterTooShort { .. })
        ));
    }

    // ══════════════════════════════════════════════════════════════════
    // quotients and powers
    // ══════════════════════════════════════════════════════════════════

    #[test]
    fn division_inverts_multiplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let order = rng.gen_range(0..=8);
            let a = random_jet(&mut rng, 1.5, order);
            let mut b = random_jet(&mut rng, 1.5, order);
            // the quotient recurrence divides by the denominator value at
            // every order, so roundoff grows with sup derivs / |b0|; keep
            // |b0| >= 1.5 to bound the amplification
            if b.value().abs() < 1.0 {
                b = jet_add(&b, &Jet::constant(1.5, 2.5, order)).unwrap();
            }
            let q = jet_div(&jet_mul(&a, &b).unwrap(), &b, "test").unwrap();
            // intermediate product entries reach a few hundred through the
            // binomial weights, so a 1e-10 absolute floor is roundoff scale
            for k in 0..=order {
                assert_relative_eq!(q.deriv(k), a.deriv(k), max_relative = 1e-11, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn division_by_vanishing_value_errors() {
        let a = Jet::variable(2.0, 3);
        let b = Jet::from_derivs(2.0, &[0.0, 1.0, 0.0, 0.0]);
        match jet_div(&a, &b, "x / y") {
            Err(Error::ZeroDenominator { expr, point }) => {
                assert_eq!(expr, "x / y");
                assert_eq!(point, 2.0);
            }
            other => panic!("expected zero denominator, got {other:?}"),
        }
    }

    #[test]
    fn integer_power_matches_repeated_product() {
        let a = Jet::from_derivs(2.0, &[2.0, 1.0, 0.0, 0.0, 0.0]);
        let p = jet_powi(&a, 4);
        // s^4 at 2: 16, 32, 48, 48, 24
        assert_eq!(p.derivs(), &[16.0, 32.0, 48.0, 48.0, 24.0]);
        assert_eq!(jet_powi(&a, 0).derivs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
