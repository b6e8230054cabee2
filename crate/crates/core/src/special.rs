//! Gamma function routines.
//!
//! `gamma` / `ln_gamma` use a Lanczos approximation (g = 7, nine terms) with
//! reflection for arguments below one half. `ln_gamma_stirling` is a separate
//! route (upward recursion followed by the Stirling series) kept for
//! cross-checks of the Mittag-Leffler coefficients.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the real line (poles at non-positive integers return NaN).
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * lanczos_sum(x)
}

/// Natural log of |Γ(x)|.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + lanczos_sum(x).ln()
}

fn lanczos_sum(x: f64) -> f64 {
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// 1/Γ(x), finite everywhere (zero at the poles).
pub fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        return 0.0;
    }
    if x > 170.0 {
        return (-ln_gamma(x)).exp();
    }
    1.0 / gamma(x)
}

/// ln Γ(x) for x > 0 by upward recursion to x ≥ 20 and the Stirling series.
pub fn ln_gamma_stirling(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma_stirling needs a positive argument");
    let mut shift = 0.0;
    let mut y = x;
    while y < 20.0 {
        shift += y.ln();
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    // Bernoulli terms B_{2k} / (2k (2k-1) y^{2k-1})
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0 - inv2 * 691.0 / 360_360.0)))));
    (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln() + series - shift
}

/// Error function (delegates to `libm`).
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function (delegates to `libm`).
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// n! as a float.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_integers_and_half() {
        for n in 1..20u32 {
            let expect = factorial(n - 1);
            assert!((gamma(n as f64) - expect).abs() <= 1e-13 * expect);
        }
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(1.5) - 0.5 * PI.sqrt()).abs() < 1e-14);
        assert!(gamma(0.0).is_nan());
        assert_eq!(recip_gamma(-2.0), 0.0);
    }

    #[test]
    fn reflection_branch() {
        // Γ(-1/2) = -2√π
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-13);
        assert!((ln_gamma(-0.5) - (2.0 * PI.sqrt()).ln()).abs() < 1e-13);
    }

    #[test]
    fn lanczos_agrees_with_stirling() {
        let mut x = 0.05;
        while x < 150.0 {
            let a = ln_gamma(x);
            let b = ln_gamma_stirling(x);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "x={x}: {a} vs {b}");
            x *= 1.17;
        }
    }

    #[test]
    fn recip_gamma_large_argument() {
        let r = recip_gamma(172.5);
        let expect = (-ln_gamma_stirling(172.5)).exp();
        assert!(r > 0.0 && r < 1e-308);
        assert!((r - expect).abs() <= 1e-10 * expect);
    }
}
