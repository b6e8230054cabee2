//! Truncated univariate power series over any numeric ring.
//!
//! Used with `f64` for the floating combinators and with `BigRational` for
//! the exact paths.

use num_traits::{One, Zero};
use std::ops::{Add, Mul, Neg, Sub};

/// Cauchy product truncated to degree `order`.
pub fn mul_trunc<T>(a: &[T], b: &[T], order: usize) -> Vec<T>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
{
    let mut out = vec![T::zero(); order + 1];
    for (i, x) in a.iter().enumerate().take(order + 1) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

/// Σ_k outer[k] · inner^k truncated to `order`; `inner` must have zero constant term.
pub fn compose_trunc<T>(outer: &[T], inner: &[T], order: usize) -> Vec<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    assert!(inner.first().is_none_or(|c| c.is_zero()), "inner series needs a zero constant term");
    let mut out = vec![T::zero(); order + 1];
    let mut power = vec![T::zero(); order + 1];
    power[0] = T::one();
    for (k, ok) in outer.iter().enumerate().take(order + 1) {
        if k > 0 {
            power = mul_trunc(&power, inner, order);
        }
        if ok.is_zero() {
            continue;
        }
        for (o, p) in out.iter_mut().zip(&power) {
            *o = o.clone() + ok.clone() * p.clone();
        }
    }
    out
}

/// Multiplicative inverse of a series with unit constant term, truncated to `order`.
pub fn recip_unit_trunc<T>(a: &[T], order: usize) -> Vec<T>
where
    T: Clone + Zero + One + PartialEq + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
{
    assert!(a.first().is_some_and(|c| *c == T::one()), "series needs a unit constant term");
    let mut r = vec![T::zero(); order + 1];
    r[0] = T::one();
    for k in 1..=order {
        let mut acc = T::zero();
        for i in 1..=k.min(a.len() - 1) {
            acc = acc + a[i].clone() * r[k - i].clone();
        }
        r[k] = -acc;
    }
    r
}

/// Horner evaluation.
pub fn horner<T>(c: &[T], x: T) -> T
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
{
    c.iter().rev().fold(T::zero(), |acc, ck| acc * x.clone() + ck.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn geometric_reciprocal() {
        // 1/(1 - x) = Σ x^k
        let r = recip_unit_trunc(&[q(1, 1), q(-1, 1)], 6);
        assert!(r.iter().all(|c| *c == q(1, 1)));
    }

    #[test]
    fn compose_exp_minus_one() {
        // exp(e^x - 1): Bell numbers / k!
        let exp: Vec<BigRational> = (0..8).scan(q(1, 1), |f, k| {
            if k > 0 {
                *f = f.clone() / q(k, 1);
            }
            Some(f.clone())
        })
        .collect();
        let mut inner = exp.clone();
        inner[0] = q(0, 1);
        let c = compose_trunc(&exp, &inner, 7);
        let bell = [1, 1, 2, 5, 15, 52, 203, 877];
        let mut fact = 1i64;
        for k in 0..8 {
            if k > 0 {
                fact *= k as i64;
            }
            assert_eq!(c[k], q(bell[k], fact));
        }
    }

    #[test]
    fn horner_matches_direct() {
        let c = [1.0, -2.0, 0.5, 3.0];
        let x: f64 = 1.7;
        let direct = 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x.powi(3);
        assert!((horner(&c, x) - direct).abs() < 1e-12);
    }
}
