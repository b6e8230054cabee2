//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals,
//! for scalar and vector-valued integrands.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision budget.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

/// Integral value with its Kronrod error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// ∫_a^b f(x) dx.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let value: f64 = parts.iter().map(|p| p.2).sum();
        let error: f64 = parts.iter().map(|p| p.3).sum();
        if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
            return Ok(Quadrature { value, error });
        }
        if parts.len() >= cfg.max_intervals {
            return Err(Error::Accuracy(format!(
                "adaptive quadrature on [{a}, {b}] stalled with error estimate {error:e}"
            )));
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

fn gk15_vec<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> (Vec<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    f(c, buf);
    for j in 0..dim {
        k[j] = buf[j] * WGK[7];
        g[j] = buf[j] * WG[3];
    }
    for i in 0..7 {
        let x = h * XGK[i];
        f(c - x, buf);
        let left = buf.to_vec();
        f(c + x, buf);
        for j in 0..dim {
            let s = left[j] + buf[j];
            k[j] += WGK[i] * s;
            if i % 2 == 1 {
                g[j] += WG[i / 2] * s;
            }
        }
    }
    let mut err: f64 = 0.0;
    for j in 0..dim {
        err = err.max(((k[j] - g[j]) * h).abs());
        k[j] *= h;
    }
    (k, err)
}

/// Componentwise ∫_a^b f(x) dx for an integrand filling a `dim`-vector.
/// The error criterion is the max-norm over components.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    cfg: QuadConfig,
) -> Result<(Vec<f64>, f64)> {
    if a == b || dim == 0 {
        return Ok((vec![0.0; dim], 0.0));
    }
    let mut buf = vec![0.0; dim];
    let (v, e) = gk15_vec(&mut f, a, b, dim, &mut buf);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let error: f64 = parts.iter().map(|p| p.3).sum();
        let scale = parts
            .iter()
            .fold(vec![0.0; dim], |mut acc, p| {
                for (s, x) in acc.iter_mut().zip(&p.2) {
                    *s += x;
                }
                acc
            })
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        if error <= cfg.abs_tol.max(cfg.rel_tol * scale) {
            let mut total = vec![0.0; dim];
            for p in &parts {
                for (s, x) in total.iter_mut().zip(&p.2) {
                    *s += x;
                }
            }
            return Ok((total, error));
        }
        if parts.len() >= cfg.max_intervals {
            return Err(Error::Accuracy(format!(
                "vector quadrature on [{a}, {b}] stalled with error estimate {error:e}"
            )));
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15_vec(&mut f, lo, mid, dim, &mut buf);
        let (v2, e2) = gk15_vec(&mut f, mid, hi, dim, &mut buf);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, QuadConfig::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((q.value - exact).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let q = integrate(|x| (50.0 * x).cos(), 0.0, 3.0, QuadConfig::default()).unwrap();
        assert!((q.value - (150.0f64).sin() / 50.0).abs() < 1e-12);
        let q = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, QuadConfig::default()).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((q.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn vector_matches_scalar() {
        let (v, _) = integrate_vec(
            |x, out| {
                out[0] = x.exp();
                out[1] = (3.0 * x).sin();
            },
            2,
            0.0,
            1.5,
            QuadConfig::default(),
        )
        .unwrap();
        assert!((v[0] - (1.5f64.exp() - 1.0)).abs() < 1e-12);
        assert!((v[1] - (1.0 - (4.5f64).cos()) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_an_accuracy_error() {
        let cfg = QuadConfig { max_intervals: 3, ..Default::default() };
        let r = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, cfg);
        assert!(matches!(r, Err(Error::Accuracy(_))));
    }
}
